"""CSV tables with a reproducibility header; no timestamps so reruns are byte-identical."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from src import __version__

TOOL_NAME = "spin-squeeze-sim"


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def render_csv(table: Table, command: str, config_sha256: str, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# tool: {TOOL_NAME}\n")
    buf.write(f"# version: {__version__}\n")
    buf.write(f"# command: {command}\n")
    buf.write(f"# config_sha256: {config_sha256}\n")
    buf.write(f"# seed: {seed}\n")
    for key, value in table.meta.items():
        buf.write(f"# {key}: {_cell(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(text: str, out: Path | None) -> None:
    if out is None:
        print(text, end="")
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
