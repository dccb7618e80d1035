"""Interaction Hamiltonians of dipolar ensembles and the ideal twisting generators.

Pair convention: every unordered pair appears once with weight 2 d_lj, which
reproduces the double sum over l != j.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np

from src.core.errors import InputError
from src.ensemble.geometry import SpinEnsemble, coupling_mean
from src.spins.operators import (
    SX,
    SY,
    SZ,
    Z_AXIS,
    Basis,
    OperatorMatrix,
    SpinAxis,
    collective_op,
    dicke_restrict,
    identity,
    jminus,
    jplus,
    jx,
    jy,
    jz,
    pair_sum,
)

Variant = Literal["1a", "2a"]


class HamiltonianKind(str, Enum):
    ISING = "ising"
    HEISENBERG = "heisenberg"
    DOUBLE_QUANTUM = "double_quantum"
    COMBINED_1A = "combined_1a"
    COMBINED_2A = "combined_2a"
    IDEAL_OAT = "ideal_oat"
    IDEAL_TAT = "ideal_tat"
    ENGINEERED_CHAIN = "engineered_chain"


@dataclass(frozen=True)
class HamiltonianSpec:
    kind: HamiltonianKind
    epsilon: float = 0.0
    d: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise InputError(f"epsilon must be >= 0, got {self.epsilon}")


def _pair_weights(ensemble: SpinEnsemble) -> np.ndarray:
    return 2.0 * ensemble.require_couplings()


def h_ising(ensemble: SpinEnsemble) -> OperatorMatrix:
    """H_zz = sum_{l<j} 2 d_lj S_z^l S_z^j."""
    return pair_sum(_pair_weights(ensemble), SZ, SZ)


def h_xx(ensemble: SpinEnsemble) -> OperatorMatrix:
    return pair_sum(_pair_weights(ensemble), SX, SX)


def h_yy(ensemble: SpinEnsemble) -> OperatorMatrix:
    return pair_sum(_pair_weights(ensemble), SY, SY)


def h_heisenberg(ensemble: SpinEnsemble) -> OperatorMatrix:
    return h_xx(ensemble) + h_yy(ensemble) + h_ising(ensemble)


def h_double_quantum(ensemble: SpinEnsemble) -> OperatorMatrix:
    """H_dq = sum_{l<j} 2 d_lj (S_x S_x - S_y S_y)."""
    return h_xx(ensemble) - h_yy(ensemble)


def h_combined(ensemble: SpinEnsemble, epsilon: float, variant: Variant) -> OperatorMatrix:
    """1a: eps H_zz + H_H.  2a: (eps H_dq + H_H) / 3."""
    if variant == "1a":
        return epsilon * h_ising(ensemble) + h_heisenberg(ensemble)
    if variant == "2a":
        return (epsilon * h_double_quantum(ensemble) + h_heisenberg(ensemble)) / 3.0
    raise InputError(f"unknown variant {variant!r}; expected '1a' or '2a'")


def ideal_oat(d: float, n: int, basis: Basis = Basis.DICKE) -> OperatorMatrix:
    z = jz(n, basis)
    return d * (z @ z)


def ideal_tat(d: float, n: int, form: Literal["xy", "pm"] = "xy", basis: Basis = Basis.DICKE) -> OperatorMatrix:
    """d (J_x^2 - J_y^2)/2, or the z-rotated form i d (J_+^2 - J_-^2)/4."""
    if form == "xy":
        x, y = jx(n, basis), jy(n, basis)
        return d * (x @ x - y @ y) / 2.0
    if form == "pm":
        p, m = jplus(n, basis), jminus(n, basis)
        return 1j * d * (p @ p - m @ m) / 4.0
    raise InputError(f"unknown TAT form {form!r}")


def zeeman(n: int, basis: Basis = Basis.FULL, axis: SpinAxis = Z_AXIS, omega: float = 1.0) -> OperatorMatrix:
    """Collective Zeeman term omega J_axis."""
    return omega * collective_op(axis, n, basis)


def build_hamiltonian(spec: HamiltonianSpec, ensemble: SpinEnsemble | None = None, n: int | None = None) -> OperatorMatrix:
    kind = spec.kind
    if kind in (HamiltonianKind.IDEAL_OAT, HamiltonianKind.IDEAL_TAT):
        size = n if n is not None else (ensemble.n if ensemble is not None else None)
        if size is None:
            raise InputError("ideal generators need a spin count")
        return ideal_oat(spec.d, size) if kind is HamiltonianKind.IDEAL_OAT else ideal_tat(spec.d, size)
    if kind is HamiltonianKind.ENGINEERED_CHAIN:
        raise InputError("use engineered_chain() for the chain protocol")
    if ensemble is None:
        raise InputError(f"{kind.value} needs an ensemble")
    builders = {
        HamiltonianKind.ISING: h_ising,
        HamiltonianKind.HEISENBERG: h_heisenberg,
        HamiltonianKind.DOUBLE_QUANTUM: h_double_quantum,
    }
    if kind in builders:
        return builders[kind](ensemble)
    return h_combined(ensemble, spec.epsilon, "1a" if kind is HamiltonianKind.COMBINED_1A else "2a")


@dataclass(frozen=True)
class ProjectionFit:
    c_quad: float
    c_id: float
    residual: float
    relative_residual: float
    expected_c_quad: float

    @property
    def c_quad_error(self) -> float:
        scale = max(abs(self.expected_c_quad), 1e-300)
        return abs(self.c_quad - self.expected_c_quad) / scale

    @property
    def satisfies_contract(self) -> bool:
        return bool(self.relative_residual < 1e-10 and self.c_quad_error < 1e-9)


def project_check(ensemble: SpinEnsemble, target: Literal["zz", "dq"] = "zz") -> ProjectionFit:
    """Fit P H P on the symmetric multiplet to c_quad Q + c_id 1.

    Q is J_z^2 for H_zz and J_x^2 - J_y^2 for H_dq; the expected quadratic
    coefficient is D / (N - 1).
    """
    n = ensemble.n
    if n < 2:
        raise InputError("projection check needs at least 2 spins")
    if target == "zz":
        full = h_ising(ensemble)
        z = jz(n, Basis.DICKE)
        quad = z @ z
    elif target == "dq":
        full = h_double_quantum(ensemble)
        x, y = jx(n, Basis.DICKE), jy(n, Basis.DICKE)
        quad = x @ x - y @ y
    else:
        raise InputError(f"unknown projection target {target!r}")
    projected = dicke_restrict(full).data
    design = np.column_stack([quad.data.ravel(), identity(n, Basis.DICKE).data.ravel()])
    design = np.vstack([design.real, design.imag])
    rhs = np.concatenate([projected.ravel().real, projected.ravel().imag])
    (c_quad, c_id), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = float(np.linalg.norm(design @ np.array([c_quad, c_id]) - rhs))
    scale = float(np.linalg.norm(projected))
    return ProjectionFit(
        c_quad=float(c_quad),
        c_id=float(c_id),
        residual=residual,
        relative_residual=residual / scale if scale > 0 else residual,
        expected_c_quad=coupling_mean(ensemble) / (n - 1),
    )
