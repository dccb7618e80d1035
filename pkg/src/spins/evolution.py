"""Exact propagation of pure states: e^{-iHt}|psi>, collective rotations, schedules."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Union

import numpy as np
from scipy.linalg import expm

from src.core.errors import InputError, NumericalContractError
from src.spins.operators import (
    ID2,
    NORM_TOL,
    Basis,
    OperatorMatrix,
    SpinAxis,
    StateVector,
    collective_op,
    spin_matrix,
)

UNITARY_TOL = 1e-10

Method = Literal["eigh", "expm"]


def _check_pair(state: StateVector, h: OperatorMatrix) -> None:
    if state.basis is not h.basis or state.n != h.n:
        raise InputError(f"basis mismatch: state {state.basis.value}({state.n}) vs hamiltonian {h.basis.value}({h.n})")
    if not h.is_hermitian:
        raise InputError(f"hamiltonian is not Hermitian (relative error {h.hermiticity_error:.2e})")


def _check_norm(before: float, after: np.ndarray) -> None:
    drift = abs(float(np.linalg.norm(after)) - before)
    if drift > NORM_TOL:
        raise NumericalContractError(f"norm drifted by {drift:.3e} during evolution")


def evolve(
    state: StateVector,
    h: OperatorMatrix,
    t: float,
    method: Method = "eigh",
    extra_diagonal: np.ndarray | None = None,
) -> StateVector:
    """Return e^{-i(H + diag(extra))t}|psi>.

    Diagonal generators are exponentiated elementwise. Otherwise the cached
    eigendecomposition of H is used, or scipy's expm when `method="expm"` or
    when an extra diagonal term makes the generator a one-off.
    """
    _check_pair(state, h)
    if t == 0.0:
        return state
    amps = state.amplitudes
    if h.is_diagonal:
        diag = np.real(np.diag(h.data))
        if extra_diagonal is not None:
            diag = diag + extra_diagonal
        out = np.exp(-1j * diag * t) * amps
    elif extra_diagonal is not None:
        out = expm(-1j * t * (h.data + np.diag(extra_diagonal))) @ amps
    elif method == "expm":
        out = expm(-1j * t * h.data) @ amps
    else:
        w, v = h.eig
        out = v @ (np.exp(-1j * w * t) * (v.conj().T @ amps))
    _check_norm(state.norm, out)
    return StateVector(out, state.basis, state.n)


def check_unitary(u: OperatorMatrix) -> None:
    err = float(np.linalg.norm(u.data.conj().T @ u.data - np.eye(u.dim)))
    if err > UNITARY_TOL:
        raise NumericalContractError(f"propagator not unitary: ||U^dag U - 1||_F = {err:.3e}")


def propagator(h: OperatorMatrix, t: float, method: Method = "eigh") -> OperatorMatrix:
    if not h.is_hermitian:
        raise InputError(f"hamiltonian is not Hermitian (relative error {h.hermiticity_error:.2e})")
    if h.is_diagonal:
        data = np.diag(np.exp(-1j * np.real(np.diag(h.data)) * t))
    elif method == "expm":
        data = expm(-1j * t * h.data)
    else:
        w, v = h.eig
        data = (v * np.exp(-1j * w * t)) @ v.conj().T
    u = OperatorMatrix(data, h.basis, h.n)
    check_unitary(u)
    return u


@lru_cache(maxsize=256)
def _dicke_rotation(axis: SpinAxis, angle: float, n: int) -> np.ndarray:
    return expm(-1j * angle * collective_op(axis, n, Basis.DICKE).data)


@dataclass(frozen=True)
class CollectiveRotation:
    """Instantaneous exp(-i angle J_axis), the same rotation on every spin."""

    axis: SpinAxis
    angle: float

    @property
    def single_spin(self) -> np.ndarray:
        half = self.angle / 2.0
        return np.cos(half) * ID2 - 2j * np.sin(half) * spin_matrix(self.axis)

    def matrix(self, n: int, basis: Basis) -> OperatorMatrix:
        if basis is Basis.DICKE:
            return OperatorMatrix(_dicke_rotation(self.axis, self.angle, n), basis, n)
        u = np.ones((1, 1), dtype=complex)
        for _ in range(n):
            u = np.kron(u, self.single_spin)
        return OperatorMatrix(u, basis, n)

    def apply(self, state: StateVector) -> StateVector:
        if state.basis is Basis.DICKE:
            out = _dicke_rotation(self.axis, self.angle, state.n) @ state.amplitudes
            return StateVector(out, state.basis, state.n)
        # one 2x2 contraction per qubit instead of a 2^N matrix
        u2 = self.single_spin
        psi = state.amplitudes.reshape((2,) * state.n)
        for q in range(state.n):
            psi = np.moveaxis(np.tensordot(u2, psi, axes=([1], [q])), 0, q)
        return StateVector(psi.reshape(-1), state.basis, state.n)


Gate = Union[CollectiveRotation, OperatorMatrix]


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if isinstance(gate, CollectiveRotation):
        return gate.apply(state)
    if gate.basis is not state.basis or gate.n != state.n:
        raise InputError("basis mismatch between gate and state")
    out = gate.data @ state.amplitudes
    _check_norm(state.norm, out)
    return StateVector(out, state.basis, state.n)


@dataclass(frozen=True)
class EvolutionStep:
    """One entry of a schedule: free evolution for `duration` or an instantaneous gate."""

    duration: float = 0.0
    hamiltonian: OperatorMatrix | None = None
    gate: Gate | None = None
    record: bool = False

    def __post_init__(self) -> None:
        if (self.hamiltonian is None) == (self.gate is None):
            raise InputError("an evolution step needs exactly one of hamiltonian or gate")
        if self.hamiltonian is not None and self.duration < 0:
            raise InputError(f"evolution duration must be >= 0, got {self.duration}")


def run_schedule(state: StateVector, steps: list[EvolutionStep]) -> tuple[StateVector, list[StateVector]]:
    """Apply the steps in order; returns the final state and the states after each recorded step."""
    recorded: list[StateVector] = []
    for step in steps:
        if step.gate is not None:
            state = apply_gate(state, step.gate)
        else:
            state = evolve(state, step.hamiltonian, step.duration)  # type: ignore[arg-type]
        if step.record:
            recorded.append(state)
    return state, recorded
