"""Shipped pulse sequences and the epsilon calibration of the MREV-8-with-echo constructions.

Each MREV-8 half-cycle is four pi/2 pulses with windows (w1, w2, w3, w4, w5)
visiting the toggled Ising frames z, y, x, y, z. Four MREV-8 blocks with a pi
pulse after the first and the third give 34 pulses over 48 tau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.ensemble.geometry import NN_FACTOR, GeometryKind, GeometrySpec, SpinEnsemble, build_ensemble
from src.models.hamiltonians import Variant, h_double_quantum, h_heisenberg, h_ising
from src.sequences.average_hamiltonian import alpha_tilde, magnus, moment_t6, toggling_frames
from src.sequences.pulses import Delay, PulseEvent, PulseSequence, pulse
from src.spins.operators import OperatorMatrix

CLOSURE_RTOL = 1e-12
MREV_PULSES = 34
MREV_CYCLE_TAUS = 48

_HALVES: dict[str, tuple[str, str, str, str]] = {
    "A": ("x", "-y", "y", "-x"),
    "B": ("-x", "y", "-y", "x"),
    "C": ("x", "y", "-y", "-x"),
    "D": ("-x", "-y", "y", "x"),
}
# (blocks of two halves, echo pi-pulse axis)
_LAYOUT: dict[str, tuple[tuple[str, str, str, str], str]] = {
    "1a": (("AC", "DB", "DB", "AC"), "z"),
    "2a": (("CC", "BB", "BB", "CC"), "x"),
}


def _half(name: str, windows: tuple[float, ...]) -> list[PulseEvent]:
    events: list[PulseEvent] = [Delay(windows[0])]
    for axis, window in zip(_HALVES[name], windows[1:]):
        events += [pulse(axis), Delay(window)]
    return events


def _windows(variant: Variant, tau: float, tau_plus: float, tau_minus: float) -> tuple[float, ...]:
    if variant == "2a":
        return (tau, tau_minus, 2.0 * tau_plus, tau_minus, tau)
    return (tau_plus, tau_minus, 2.0 * tau_minus, tau_minus, tau_plus)


def _check_closure(variant: Variant, tau: float, tau_plus: float, tau_minus: float) -> None:
    if tau <= 0 or tau_plus <= 0 or tau_minus <= 0:
        raise InputError("pulse delays must be positive")
    if variant == "2a":
        closure, rule = tau_plus + tau_minus - 2.0 * tau, "tau_plus + tau_minus = 2 tau"
    elif variant == "1a":
        closure, rule = tau_plus + 2.0 * tau_minus - 3.0 * tau, "tau_plus + 2 tau_minus = 3 tau"
    else:
        raise InputError(f"unknown variant {variant!r}; expected '1a' or '2a'")
    if abs(closure) > CLOSURE_RTOL * 10.0 * tau:
        raise InputError(f"cycle not closed: {rule} violated by {closure:.3e} us")


def mrev8_with_echo(
    tau: float,
    tau_plus: float | None = None,
    tau_minus: float | None = None,
    variant: Variant = "2a",
) -> PulseSequence:
    tau_plus = tau if tau_plus is None else tau_plus
    tau_minus = tau if tau_minus is None else tau_minus
    _check_closure(variant, tau, tau_plus, tau_minus)
    blocks, echo_axis = _LAYOUT[variant]
    windows = _windows(variant, tau, tau_plus, tau_minus)
    events: list[PulseEvent] = []
    for index, block in enumerate(blocks):
        for half in block:
            events += _half(half, windows)
        if index in (0, 2):
            events.append(pulse(echo_axis, math.pi))
    seq = PulseSequence(tuple(events), name=f"mrev8_echo_{variant}")
    if seq.n_pulses != MREV_PULSES or abs(seq.cycle_time - MREV_CYCLE_TAUS * tau) > 1e-9 * tau:
        raise InputError(f"reconstructed sequence has {seq.n_pulses} pulses over {seq.cycle_time} us")
    return seq


def delays_for_epsilon(tau: float, epsilon: float, variant: Variant) -> tuple[float, float]:
    """(tau_plus, tau_minus) whose first-order average carries anisotropy epsilon."""
    if epsilon < 0:
        raise InputError("epsilon must be >= 0")
    if variant == "2a":
        if epsilon >= 1.0:
            raise InputError("2a construction needs epsilon < 1")
        return tau * (1.0 + epsilon), tau * (1.0 - epsilon)
    if variant == "1a":
        return 3.0 * tau * (1.0 + epsilon) / (3.0 + epsilon), 3.0 * tau / (3.0 + epsilon)
    raise InputError(f"unknown variant {variant!r}")


def delays_for_ratio(tau: float, ratio: float, variant: Variant) -> tuple[float, float]:
    """(tau_plus, tau_minus) with (tau_plus - tau_minus) / tau = ratio and the cycle closed."""
    if variant == "2a":
        return tau * (1.0 + ratio / 2.0), tau * (1.0 - ratio / 2.0)
    return tau * (1.0 + 2.0 * ratio / 3.0), tau * (1.0 - ratio / 3.0)


def wahuha(tau: float) -> PulseSequence:
    return PulseSequence(tuple(_half("A", (tau, tau, 2.0 * tau, tau, tau))), name="wahuha")


def spin_echo(tau: float, axis: str = "x") -> PulseSequence:
    """tau - pi - tau; the net rotation is a pi pulse, so the sequence is not cyclic."""
    return PulseSequence((Delay(tau), pulse(axis, math.pi), Delay(tau)), name="spin_echo")


def cpmg(tau: float, n_pi: int, axis: str = "y") -> PulseSequence:
    if n_pi < 1:
        raise InputError("CPMG needs at least one pi pulse")
    events: list[PulseEvent] = [Delay(tau / 2.0)]
    for k in range(n_pi):
        events.append(pulse(axis, math.pi))
        events.append(Delay(tau if k < n_pi - 1 else tau / 2.0))
    return PulseSequence(tuple(events), name=f"cpmg{n_pi}")


TEMPLATES: dict[str, Callable[..., PulseSequence]] = {
    "mrev8_echo": mrev8_with_echo,
    "wahuha": wahuha,
    "spin_echo": spin_echo,
    "cpmg": cpmg,
}


def reference_ensemble() -> SpinEnsemble:
    """Small random slab used for epsilon calibration."""
    return build_ensemble(GeometrySpec(kind=GeometryKind.RANDOM_SLAB_3D, n=4, seed=11))


@dataclass(frozen=True)
class EpsilonFit:
    epsilon: float
    scale: float
    residual: float
    relative_residual: float


def fit_average_hamiltonian(h1: OperatorMatrix, ensemble: SpinEnsemble, variant: Variant) -> EpsilonFit:
    """Least squares h1 ~ scale (H_H + epsilon Q), Q = H_zz (1a) or H_dq (2a)."""
    quad = h_ising(ensemble) if variant == "1a" else h_double_quantum(ensemble)
    basis_ops = [h_heisenberg(ensemble).data.ravel(), quad.data.ravel()]
    design = np.column_stack(basis_ops)
    design = np.vstack([design.real, design.imag])
    rhs = np.concatenate([h1.data.ravel().real, h1.data.ravel().imag])
    (a, b), *_ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = float(np.linalg.norm(design @ np.array([a, b]) - rhs))
    scale = float(np.linalg.norm(rhs))
    if abs(a) < 1e-300:
        raise InputError("average Hamiltonian has no isotropic component")
    return EpsilonFit(
        epsilon=float(b / a),
        scale=float(a),
        residual=residual,
        relative_residual=residual / scale if scale > 0 else residual,
    )


def calibrate_epsilon(
    tau: float,
    tau_plus: float,
    tau_minus: float,
    variant: Variant,
    ensemble: SpinEnsemble | None = None,
) -> EpsilonFit:
    ensemble = reference_ensemble() if ensemble is None else ensemble
    seq = mrev8_with_echo(tau, tau_plus, tau_minus, variant)
    h1 = magnus(toggling_frames(seq, h_ising(ensemble)), 1)
    fit = fit_average_hamiltonian(h1, ensemble, variant)
    log_event(
        get_logger(),
        "DEBUG",
        "epsilon_calibrated",
        variant=variant,
        tau=tau,
        tau_plus=tau_plus,
        tau_minus=tau_minus,
        epsilon=fit.epsilon,
        relative_residual=fit.relative_residual,
    )
    return fit


def epsilon_table(
    tau: float,
    ratios: list[float] | np.ndarray,
    variant: Variant,
    ensemble: SpinEnsemble | None = None,
) -> list[tuple[float, float]]:
    """Fitted epsilon against (tau_plus - tau_minus) / tau."""
    ensemble = reference_ensemble() if ensemble is None else ensemble
    table = []
    for ratio in ratios:
        tau_plus, tau_minus = delays_for_ratio(tau, float(ratio), variant)
        table.append((float(ratio), calibrate_epsilon(tau, tau_plus, tau_minus, variant, ensemble).epsilon))
    eps = [e for _, e in table]
    if any(b < a for a, b in zip(eps, eps[1:])):
        log_event(get_logger(), "WARN", "epsilon_table_not_monotone", variant=variant, table=table)
    return table


# 1e18 cm^-3 in nm^-3
REFERENCE_DENSITY = 1e-3


@lru_cache(maxsize=64)
def reference_alpha_tilde(tau: float, variant: Variant = "2a") -> float:
    """alpha-tilde of MREV-8 with echo at tau, from the third-order moment of a nearest-neighbour plaquette.

    Four spins on a square of side NN_FACTOR * n_s^(-1/3) at REFERENCE_DENSITY,
    quantization axis normal to the plaquette. The moment scales as n_s^6, so
    dividing it out leaves a density-independent coefficient.
    """
    spacing = NN_FACTOR * REFERENCE_DENSITY ** (-1.0 / 3.0)
    plaquette = build_ensemble(GeometrySpec(kind=GeometryKind.LATTICE_2D, n=4, spacing=spacing))
    h3 = magnus(toggling_frames(mrev8_with_echo(tau, variant=variant), h_ising(plaquette)), 3)
    moment = moment_t6(h3)
    log_event(get_logger(), "DEBUG", "alpha_tilde_derived", tau=tau, variant=variant, moment_t6=moment)
    return alpha_tilde(moment, REFERENCE_DENSITY)
