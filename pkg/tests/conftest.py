from __future__ import annotations

import logging
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.core.logger import LOGGER_NAME  # noqa: E402
from src.ensemble.geometry import GeometryKind, GeometrySpec, SpinEnsemble, build_ensemble  # noqa: E402


@pytest.fixture(autouse=True)
def _library_logger():
    """Undo app-level logger setup between tests so caplog sees library events."""
    logger = logging.getLogger(LOGGER_NAME)
    logger.handlers.clear()
    logger.propagate = True
    logger.setLevel(logging.DEBUG)
    yield


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("SPIN_SQUEEZE_N_MAX", "SPIN_SQUEEZE_DICKE_N_MAX", "SPIN_SQUEEZE_WORKERS"):
        monkeypatch.delenv(name, raising=False)


def pair_ensemble(d: float) -> SpinEnsemble:
    return SpinEnsemble.from_couplings(np.array([[0.0, d], [d, 0.0]]))


def random_slab(n: int, seed: int) -> SpinEnsemble:
    return build_ensemble(GeometrySpec(kind=GeometryKind.RANDOM_SLAB_3D, n=n, seed=seed))


@pytest.fixture
def slab4() -> SpinEnsemble:
    return random_slab(4, seed=3)


@pytest.fixture
def slab8_geometry() -> SpinEnsemble:
    spec = GeometrySpec(kind=GeometryKind.RANDOM_SLAB_3D, lx=30.0, ly=30.0, lz=9.0, density=1e-3, seed=7)
    return build_ensemble(spec)
