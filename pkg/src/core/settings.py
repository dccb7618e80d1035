from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    n_max: int = 14
    dicke_n_max: int = 4000
    workers: int = 1


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def get_settings() -> Settings:
    """Read process settings from the environment (app.py loads .env first)."""
    return Settings(
        n_max=_int_env("SPIN_SQUEEZE_N_MAX", 14),
        dicke_n_max=_int_env("SPIN_SQUEEZE_DICKE_N_MAX", 4000),
        workers=_int_env("SPIN_SQUEEZE_WORKERS", 1),
    )
