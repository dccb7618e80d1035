"""Plain-text position tables: one spin per row, x y z in nm, '#' comments."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from src.core.errors import InputError

HEADER = "spin positions in nm\nx_nm y_nm z_nm"


def write_positions(path: str | Path, positions: np.ndarray) -> None:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise InputError("positions must be an (n, 3) array")
    np.savetxt(path, pos, fmt="%.9f", header=HEADER, comments="# ")


def read_positions(path: str | Path) -> np.ndarray:
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read position table {path}: {exc}") from exc
    if data.shape[1] != 3:
        raise InputError(f"position table {path} must have 3 columns, found {data.shape[1]}")
    if data.shape[0] < 1:
        raise InputError(f"position table {path} is empty")
    return data
