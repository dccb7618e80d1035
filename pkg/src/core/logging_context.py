"""Run id shared by every log line of one CLI invocation."""
from __future__ import annotations

import contextvars
import uuid

_RUN_ID: contextvars.ContextVar[str] = contextvars.ContextVar("run_id", default="")


def start_new_run() -> str:
    run_id = uuid.uuid4().hex[:8]
    _RUN_ID.set(run_id)
    return run_id


def get_run_id() -> str:
    return _RUN_ID.get()
