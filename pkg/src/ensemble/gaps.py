"""Energy gap between the symmetric multiplet and the J < N/2 manifolds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import eigvalsh, null_space

from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.core.units import J0
from src.ensemble.geometry import SpinEnsemble
from src.models.hamiltonians import h_heisenberg
from src.spins.operators import dicke_isometry


class GapKind(str, Enum):
    CHAIN_NN = "chain_nn"
    CHAIN_DIPOLAR = "chain_dipolar"
    LATTICE_NN = "lattice_nn"
    LATTICE_DIPOLAR = "lattice_dipolar"
    RANDOM = "random"


def gap_estimate(kind: GapKind, n: int, d_0: float, n_s: float | None = None, dim: int = 3) -> float:
    """Order-of-magnitude gap (coefficient 1) for the scaling families of dipolar ensembles."""
    if n < 2:
        raise InputError("gap estimate needs n >= 2")
    kind = GapKind(kind)
    if kind is GapKind.CHAIN_NN:
        return d_0 / n**2
    if kind is GapKind.CHAIN_DIPOLAR:
        return d_0 * math.log(n) / n**2
    if kind is GapKind.LATTICE_NN:
        return d_0 / n
    if kind is GapKind.LATTICE_DIPOLAR:
        return d_0 / math.sqrt(n)
    if n_s is None or n_s <= 0:
        raise InputError("random-ensemble gap estimate needs the density n_s")
    d_min = J0 * (n_s / n) ** (3.0 / dim)
    return d_min * n / 2.0


@dataclass(frozen=True)
class GapResult:
    gap: float
    symmetric_energy: float
    sign: int
    warning: bool


def gap_exact(ensemble: SpinEnsemble | np.ndarray) -> GapResult:
    """Gap of sum_{l<j} d_lj S_l.S_j above the J = N/2 multiplet.

    Both overall signs are tried and the one giving the larger gap is kept,
    so the symmetric multiplet is the ground manifold whenever possible.
    `warning` is set when neither sign makes it the lowest.
    """
    if isinstance(ensemble, np.ndarray):
        ensemble = SpinEnsemble.from_couplings(ensemble)
    couplings = ensemble.require_couplings()
    n = couplings.shape[0]
    if n < 2:
        raise InputError("gap needs at least 2 spins")
    # h_heisenberg counts each pair as 2 d S.S
    exchange = 0.5 * h_heisenberg(ensemble).data
    symmetric_energy = float(np.sum(np.triu(couplings, k=1))) / 4.0
    complement = null_space(dicke_isometry(n).conj().T)
    energies = eigvalsh(complement.conj().T @ exchange @ complement)

    best_sign, best_gap = 1, -math.inf
    for sign in (1, -1):
        gap = float(np.min(sign * energies) - sign * symmetric_energy)
        if gap > best_gap:
            best_sign, best_gap = sign, gap
    warning = best_gap <= 0.0
    if warning:
        log_event(get_logger(), "WARN", "gap_not_lowest", n=n, gap=best_gap)
    return GapResult(gap=best_gap, symmetric_energy=best_sign * symmetric_energy, sign=best_sign, warning=warning)
