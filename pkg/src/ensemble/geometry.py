"""Spin placement and dipolar coupling statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.special import gamma as gamma_fn

from src.core.errors import InputError, PlacementError
from src.core.logger import get_logger, log_event
from src.core.units import J0
from src.spins.operators import Z_AXIS, SpinAxis

DEFAULT_R_MIN = 0.5
MAX_PLACEMENT_TRIES = 2000

# mean nearest-neighbour distance of a Poisson point set is NN_FACTOR * n_s^(-1/3)
NN_FACTOR = float(gamma_fn(4.0 / 3.0) * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0))


class GeometryKind(str, Enum):
    CHAIN_1D = "chain1d"
    LATTICE_2D = "lattice2d"
    RANDOM_SLAB_3D = "random_slab3d"


@dataclass(frozen=True)
class GeometrySpec:
    kind: GeometryKind
    n: int | None = None
    spacing: float = 10.0
    lx: float = 30.0
    ly: float = 30.0
    lz: float = 9.0
    density: float | None = None
    seed: int = 0
    r_min: float = DEFAULT_R_MIN
    quant_axis: SpinAxis = Z_AXIS

    def __post_init__(self) -> None:
        if self.kind is GeometryKind.RANDOM_SLAB_3D:
            if min(self.lx, self.ly, self.lz) <= 0:
                raise InputError("slab dimensions must be positive")
            if self.n is None and (self.density is None or self.density <= 0):
                raise InputError("random slab needs a positive density or an explicit n")
        elif self.spacing <= 0:
            raise InputError("lattice spacing must be positive")
        if self.n is not None and self.n < 1:
            raise InputError(f"spin count must be >= 1, got {self.n}")
        if self.r_min < 0:
            raise InputError("exclusion radius must be >= 0")

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz

    def spin_count(self) -> int:
        if self.n is not None:
            return self.n
        if self.kind is GeometryKind.RANDOM_SLAB_3D:
            return max(1, int(round(self.density * self.volume)))  # type: ignore[operator]
        raise InputError(f"{self.kind.value} geometry needs an explicit n")


@dataclass(frozen=True, eq=False)
class SpinEnsemble:
    positions: np.ndarray | None
    couplings: np.ndarray | None = None
    quant_axis: SpinAxis = Z_AXIS
    density: float | None = None
    kind: GeometryKind | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        if self.positions is not None:
            return int(self.positions.shape[0])
        return int(self.couplings.shape[0])  # type: ignore[union-attr]

    def require_couplings(self) -> np.ndarray:
        if self.couplings is None:
            raise InputError("ensemble has no coupling matrix; call with_couplings() first")
        return self.couplings

    def with_couplings(self) -> SpinEnsemble:
        if self.positions is None:
            raise InputError("ensemble has no positions")
        return replace(self, couplings=dipolar_couplings(self.positions, self.quant_axis))

    @classmethod
    def from_couplings(cls, couplings: np.ndarray) -> SpinEnsemble:
        c = np.asarray(couplings, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InputError("coupling matrix must be square")
        if not np.allclose(c, c.T, rtol=0, atol=1e-12 * max(1.0, float(np.abs(c).max(initial=0.0)))):
            raise InputError("coupling matrix must be symmetric")
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 0.0)
        return cls(positions=None, couplings=c)


def uniform_ensemble(n: int, d: float) -> SpinEnsemble:
    """All-to-all ensemble with every pair coupled by d."""
    c = np.full((n, n), float(d))
    np.fill_diagonal(c, 0.0)
    return SpinEnsemble.from_couplings(c)


def _regular_positions(spec: GeometrySpec, n: int) -> np.ndarray:
    if spec.kind is GeometryKind.CHAIN_1D:
        return np.column_stack([np.arange(n) * spec.spacing, np.zeros(n), np.zeros(n)])
    side = int(math.ceil(math.sqrt(n)))
    idx = np.arange(n)
    return np.column_stack([(idx % side) * spec.spacing, (idx // side) * spec.spacing, np.zeros(n)])


def _random_positions(spec: GeometrySpec, n: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    box = np.array([spec.lx, spec.ly, spec.lz])
    placed = np.empty((0, 3))
    for index in range(n):
        for _ in range(MAX_PLACEMENT_TRIES):
            candidate = rng.uniform(0.0, 1.0, size=3) * box
            if placed.shape[0] == 0 or np.min(np.linalg.norm(placed - candidate, axis=1)) > spec.r_min:
                placed = np.vstack([placed, candidate])
                break
        else:
            raise PlacementError(
                f"could not place spin {index + 1}/{n} with r_min={spec.r_min} nm after {MAX_PLACEMENT_TRIES} tries"
            )
    return placed


def place_spins(spec: GeometrySpec) -> SpinEnsemble:
    """Positions only; deterministic for a given seed."""
    n = spec.spin_count()
    if spec.kind is GeometryKind.RANDOM_SLAB_3D:
        positions = _random_positions(spec, n)
        density = spec.density if spec.density is not None else n / spec.volume
    else:
        positions = _regular_positions(spec, n)
        density = None
    log_event(get_logger(), "DEBUG", "spins_placed", kind=spec.kind.value, n=n, seed=spec.seed)
    return SpinEnsemble(positions=positions, quant_axis=spec.quant_axis, density=density, kind=spec.kind)


def build_ensemble(spec: GeometrySpec) -> SpinEnsemble:
    return place_spins(spec).with_couplings()


def dipolar_couplings(positions: np.ndarray, quant_axis: SpinAxis = Z_AXIS) -> np.ndarray:
    """d_lj = J0 (3 cos^2 theta_lj - 1) / r_lj^3 in rad/us, zero diagonal."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise InputError("positions must be an (n, 3) array in nm")
    if pos.shape[0] < 2:
        raise InputError("dipolar couplings need at least 2 spins")
    diff = pos[:, None, :] - pos[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    off = ~np.eye(pos.shape[0], dtype=bool)
    if np.any(r[off] < 1e-12):
        raise InputError("coincident spin positions")
    np.fill_diagonal(r, 1.0)
    cos_theta = (diff @ quant_axis.vector) / r
    d = J0 * (3.0 * cos_theta**2 - 1.0) / r**3
    np.fill_diagonal(d, 0.0)
    return d


def coupling_mean(ensemble: SpinEnsemble) -> float:
    """D = (1/N) sum over ordered pairs of d_lj."""
    c = ensemble.require_couplings()
    if c.shape[0] < 2:
        raise InputError("coupling mean needs at least 2 spins")
    return float(c.sum() / c.shape[0])


def coupling_median(ensemble: SpinEnsemble) -> float:
    c = ensemble.require_couplings()
    upper = np.abs(c[np.triu_indices(c.shape[0], k=1)])
    return float(np.median(upper))


def coupling_median_heuristic(n_s: float, r_0: float, d_0: float, n: int) -> float:
    """Median-coupling estimate (2 pi / 3) d_0 r_0^3 n_s / (N + 2)."""
    if min(n_s, r_0) <= 0 or n < 1:
        raise InputError("median heuristic needs positive density, spacing and spin count")
    return (2.0 * math.pi / 3.0) * d_0 * r_0**3 * n_s / (n + 2)


def lattice_coupling_mean(kind: GeometryKind, n: int, spacing: float = 1.0) -> float:
    """D / d_0 for a regular dipolar chain or square lattice, d_0 the nearest-neighbour coupling."""
    if kind is GeometryKind.RANDOM_SLAB_3D:
        raise InputError("lattice_coupling_mean applies to regular geometries only")
    spec = GeometrySpec(kind=kind, n=n, spacing=spacing)
    ensemble = build_ensemble(spec)
    # sites lie in the plane perpendicular to the quantization axis
    d_0 = -J0 / spacing**3
    return coupling_mean(ensemble) / d_0


def nearest_neighbour_coupling(n_s: float) -> float:
    """|d| at the mean nearest-neighbour distance of a random ensemble of density n_s (nm^-3)."""
    if n_s <= 0:
        raise InputError("density must be positive")
    r_nn = NN_FACTOR * n_s ** (-1.0 / 3.0)
    return J0 / r_nn**3
