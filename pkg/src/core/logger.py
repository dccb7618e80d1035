from __future__ import annotations

import json
import logging
import os
from typing import Any

import numpy as np

from src.core.logging_context import get_run_id

LOGGER_NAME = "spin_squeeze"
TRACE = 5
ARRAY_PREVIEW = 16
PAYLOAD_CHARS = 600

LEVELS = {"TRACE": TRACE, "DEBUG": logging.DEBUG, "INFO": logging.INFO, "WARN": logging.WARNING, "WARNING": logging.WARNING, "ERROR": logging.ERROR}

logging.addLevelName(TRACE, "TRACE")


class _RunIdFilter(logging.Filter):
    """Stamps the current run id on every record, including library events."""

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "run_id"):
            record.run_id = get_run_id() or "-"
        return True


def _summarize(value: Any, full: bool) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        if full or value.size <= ARRAY_PREVIEW:
            return np.real_if_close(value).tolist() if np.iscomplexobj(value) else value.tolist()
        finite = np.abs(value[np.isfinite(value)]) if np.iscomplexobj(value) else value[np.isfinite(value)]
        return {
            "shape": list(value.shape),
            "min": float(finite.min()) if finite.size else None,
            "max": float(finite.max()) if finite.size else None,
        }
    if isinstance(value, (list, tuple)):
        return [_summarize(item, full) for item in value]
    return value


def _payload(payload: dict[str, Any], full: bool) -> dict[str, Any]:
    cleaned: dict[str, Any] = {}
    for key, value in payload.items():
        value = _summarize(value, full)
        if not full and isinstance(value, (dict, list)):
            raw = json.dumps(value, default=str)
            if len(raw) > PAYLOAD_CHARS:
                value = raw[:PAYLOAD_CHARS] + "..."
        cleaned[key] = value
    return cleaned


def setup_logger() -> logging.Logger:
    level = LEVELS.get(os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)

    logger = logging.getLogger(LOGGER_NAME)
    logger.handlers.clear()
    logger.filters.clear()
    logger.setLevel(level)
    logger.addFilter(_RunIdFilter())

    # stderr only; stdout is reserved for CSV output
    handler = logging.StreamHandler()
    if os.getenv("LOG_PRETTY", "true").lower() == "true":
        fmt = "%(asctime)s | %(levelname)-5s | run=%(run_id)s | %(message)s"
    else:
        fmt = "%(levelname)s run=%(run_id)s %(message)s"
    handler.setFormatter(logging.Formatter(fmt))
    logger.addHandler(handler)
    logger.propagate = False
    return logger


def get_logger() -> logging.Logger:
    """Library modules log through the shared named logger without configuring it."""
    return logging.getLogger(LOGGER_NAME)


def log_event(logger: logging.Logger, level_name: str, event: str, **payload: Any) -> None:
    """Emit `event | {json}`; arrays are summarized and long payloads cut unless at TRACE."""
    level = LEVELS.get(level_name.upper(), logging.ERROR)
    if not logger.isEnabledFor(level):
        return
    body = json.dumps(_payload(payload, full=level == TRACE), default=str)
    logger.log(level, f"{event} | {body}", extra={"run_id": get_run_id() or "-"})
