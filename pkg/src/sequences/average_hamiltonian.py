"""Toggling-frame transformation, piecewise Magnus expansion and sequence propagation.

The toggled operator during the k-th delay is U_c^dag O U_c, where U_c is the
product of all pulses applied so far (earliest on the right).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.sequences.pulses import Delay, PulseSequence, Rotation
from src.spins.evolution import CollectiveRotation, EvolutionStep, propagator, run_schedule
from src.spins.operators import (
    ID2,
    SX,
    SY,
    SZ,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    Basis,
    OperatorMatrix,
    SpinAxis,
    StateVector,
    collective_op,
    commutator,
    spin_matrix,
    zeros,
)

SUM_TOL = 1e-12


@dataclass(frozen=True)
class ToggledFrame:
    segments: tuple[tuple[OperatorMatrix, float], ...]

    @property
    def cycle_time(self) -> float:
        return float(sum(tau for _, tau in self.segments))


def _control_unitaries(seq: PulseSequence) -> list[tuple[np.ndarray, float]]:
    """(accumulated single-spin control unitary, delay) for every delay of the cycle."""
    u = ID2.copy()
    out: list[tuple[np.ndarray, float]] = []
    for event in seq.events:
        if isinstance(event, Rotation):
            u = event.single_spin @ u
        else:
            out.append((u.copy(), event.duration))
    return out


def _as_rotation(u: np.ndarray) -> CollectiveRotation:
    """Axis-angle form of a single-spin unitary, global phase dropped."""
    det = np.linalg.det(u)
    su = u / np.sqrt(det)
    # su = cos(a/2) 1 - 2i sin(a/2) n.S with S = sigma/2
    c = float(np.real(np.trace(su)) / 2.0)
    vec = np.array([np.imag(np.trace(su @ (2 * s))) / -2.0 for s in (SX, SY, SZ)])
    s = float(np.linalg.norm(vec))
    if s < 1e-14:
        return CollectiveRotation(Z_AXIS, 0.0 if c > 0 else 2.0 * math.pi)
    angle = 2.0 * math.atan2(s, c)
    return CollectiveRotation(SpinAxis.of(*vec), angle)


def _toggle(op: OperatorMatrix, u: np.ndarray) -> OperatorMatrix:
    rot = _as_rotation(u)
    if rot.angle == 0.0:
        return op
    big = rot.matrix(op.n, op.basis).data
    return OperatorMatrix(big.conj().T @ op.data @ big, op.basis, op.n)


def toggling_frames(seq: PulseSequence, h_int: OperatorMatrix, require_cyclic: bool = True) -> ToggledFrame:
    if require_cyclic:
        seq.require_cyclic()
    segments = tuple((_toggle(h_int, u), tau) for u, tau in _control_unitaries(seq))
    frame = ToggledFrame(segments)
    if abs(frame.cycle_time - seq.cycle_time) > SUM_TOL * max(1.0, seq.cycle_time):
        raise InputError("toggled segments do not cover the cycle")
    return frame


def _omegas(frame: ToggledFrame, max_order: int) -> list[OperatorMatrix]:
    steps = [(-1j * tau) * h for h, tau in frame.segments]
    first = steps[0]
    omega1 = zeros(first.n, first.basis)
    for a in steps:
        omega1 = omega1 + a
    out = [omega1]
    if max_order >= 2:
        omega2 = zeros(first.n, first.basis)
        before = zeros(first.n, first.basis)
        for a in steps:
            omega2 = omega2 + 0.5 * commutator(a, before)
            before = before + a
        out.append(omega2)
    if max_order >= 3:
        omega3 = zeros(first.n, first.basis)
        before = zeros(first.n, first.basis)
        for b, a in enumerate(steps):
            after = omega1 - before - a
            omega3 = omega3 + commutator(after, commutator(a, before)) + commutator(before, commutator(a, after))
            omega3 = omega3 + 0.5 * (commutator(a, commutator(a, before)) + commutator(a, commutator(a, after)))
            before = before + a
        out.append(omega3 / 6.0)
    return out


def magnus_terms(frame: ToggledFrame, max_order: int = 3) -> list[OperatorMatrix]:
    """[H^(1), ..., H^(max_order)] with U(t_c) = exp(-i (H^(1) + H^(2) + ...) t_c)."""
    if max_order not in (1, 2, 3):
        raise InputError(f"Magnus order must be 1, 2 or 3, got {max_order}")
    t_c = frame.cycle_time
    return [(1j / t_c) * omega for omega in _omegas(frame, max_order)]


def magnus(frame: ToggledFrame, order: int) -> OperatorMatrix:
    return magnus_terms(frame, order)[order - 1]


def effective_field_vector(seq: PulseSequence, field_axis: SpinAxis = Z_AXIS, require_cyclic: bool = True) -> np.ndarray:
    """Cycle-averaged toggled J_axis as a 3-vector of collective-spin components."""
    if require_cyclic:
        seq.require_cyclic()
    s = spin_matrix(field_axis)
    total = np.zeros(3)
    for u, tau in _control_unitaries(seq):
        toggled = u.conj().T @ s @ u
        total += tau * np.array([2.0 * np.real(np.trace(toggled @ p)) for p in (SX, SY, SZ)])
    return total / seq.cycle_time


def effective_field(seq: PulseSequence, n: int, basis: Basis = Basis.FULL, field_axis: SpinAxis = Z_AXIS) -> OperatorMatrix:
    vec = effective_field_vector(seq, field_axis)
    out = zeros(n, basis)
    for comp, axis in zip(vec, (X_AXIS, Y_AXIS, Z_AXIS)):
        if comp != 0.0:
            out = out + float(comp) * collective_op(axis, n, basis)
    return out


def field_angle(vec: np.ndarray) -> float:
    """nu of a field lying in the z-y plane, J_z cos(nu) + J_y sin(nu)."""
    return float(math.atan2(vec[1], vec[2]))


def moment_t6(h3bar: OperatorMatrix, perp_axis: SpinAxis = X_AXIS) -> float:
    """|Tr([H^(3), J_perp]^2)| / Tr(J_perp^2), a squared rate in (rad/us)^2."""
    if not h3bar.is_hermitian:
        raise InputError("third-order average Hamiltonian must be Hermitian")
    j_perp = collective_op(perp_axis, h3bar.n, h3bar.basis)
    c = commutator(h3bar, j_perp)
    num = np.trace(c.data @ c.data)
    den = np.real(np.trace(j_perp.data @ j_perp.data))
    return float(abs(np.real(num)) / den)


def alpha_tilde(moment: float, n_s: float) -> float:
    """Density-normalized dephasing coefficient moment / n_s^6."""
    if n_s <= 0:
        raise InputError("density must be positive")
    return moment / n_s**6


def cycle_propagator(seq: PulseSequence, h_int: OperatorMatrix) -> OperatorMatrix:
    """Exact U(t_c) for one pass through the sequence."""
    u = np.eye(h_int.dim, dtype=complex)
    for event in seq.events:
        if isinstance(event, Delay):
            u = propagator(h_int, event.duration).data @ u
        else:
            u = event.gate.matrix(h_int.n, h_int.basis).data @ u
    return OperatorMatrix(u, h_int.basis, h_int.n)


def sequence_schedule(seq: PulseSequence, h_int: OperatorMatrix, n_cycles: int, record_cycles: bool = True) -> list[EvolutionStep]:
    """Evolution steps for `n_cycles` passes; the last step of each cycle is recorded."""
    if n_cycles < 1:
        raise InputError("need at least one cycle")
    one: list[EvolutionStep] = []
    for event in seq.events:
        if isinstance(event, Delay):
            one.append(EvolutionStep(duration=event.duration, hamiltonian=h_int))
        else:
            one.append(EvolutionStep(gate=event.gate))
    steps: list[EvolutionStep] = []
    for _ in range(n_cycles):
        cycle = list(one)
        if record_cycles:
            last = cycle[-1]
            cycle[-1] = EvolutionStep(duration=last.duration, hamiltonian=last.hamiltonian, gate=last.gate, record=True)
        steps.extend(cycle)
    return steps


def propagate_sequence(
    seq: PulseSequence,
    h_int: OperatorMatrix,
    state: StateVector,
    n_cycles: int = 1,
    require_cyclic: bool = True,
) -> tuple[StateVector, list[StateVector]]:
    """Exact piecewise evolution; returns the final state and the state after each cycle."""
    if require_cyclic:
        seq.require_cyclic()
    final, recorded = run_schedule(state, sequence_schedule(seq, h_int, n_cycles))
    log_event(get_logger(), "DEBUG", "sequence_propagated", name=seq.name, n_cycles=n_cycles, t_c=seq.cycle_time)
    return final, recorded
