from __future__ import annotations

from typing import Literal

import numpy as np

from src.core.errors import InputError
from src.spins.operators import X_AXIS, Y_AXIS, Basis, SpinAxis, StateVector, coherent_state

RelativePhase = Literal["printed", "best"]


def oat_ghz_axis(n: int) -> SpinAxis:
    """Axis of the cat state produced by e^{-i pi J_z^2 / 2} from |+x>: x for even N, y for odd N."""
    return X_AXIS if n % 2 == 0 else Y_AXIS


def ghz_branches(state: StateVector, axis: SpinAxis) -> tuple[complex, complex]:
    plus = coherent_state(axis, state.n, state.basis)
    minus = coherent_state(-axis, state.n, state.basis)
    return plus.overlap(state), minus.overlap(state)


def ghz_fidelity(state: StateVector, n: int, axis: SpinAxis = X_AXIS, relative_phase: RelativePhase = "best") -> float:
    """Overlap with (|+axis>^N + e^{i phi} |-axis>^N)/sqrt(2).

    "printed" fixes e^{i phi} = (-i)^(N+1); "best" maximizes over phi,
    giving (|a| + |b|)^2 / 2 for the two branch amplitudes.
    """
    if state.n != n:
        raise InputError(f"state has {state.n} spins, expected {n}")
    a, b = ghz_branches(state, axis)
    if relative_phase == "best":
        fidelity = (abs(a) + abs(b)) ** 2 / 2.0
    elif relative_phase == "printed":
        phase = (-1j) ** (n + 1)
        fidelity = abs(a + np.conj(phase) * b) ** 2 / 2.0
    else:
        raise InputError(f"unknown relative phase mode {relative_phase!r}")
    return float(min(max(fidelity, 0.0), 1.0))


def ghz_state(n: int, axis: SpinAxis, basis: Basis, phase: complex | None = None) -> StateVector:
    phase = (-1j) ** (n + 1) if phase is None else phase
    plus = coherent_state(axis, n, basis).amplitudes
    minus = coherent_state(-axis, n, basis).amplitudes
    return StateVector((plus + phase * minus) / np.sqrt(2.0), basis, n)
