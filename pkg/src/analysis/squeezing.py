"""Squeezing parameters, the closed-form one-axis-twisting solution and its noisy variants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.spins.operators import (
    Basis,
    OperatorMatrix,
    StateVector,
    expectation,
    jx,
    jy,
    jz,
    variance,
)

Axis = Literal["x", "y", "z"]

# (e1, e2) spanning the plane perpendicular to the mean spin; J(nu) = cos(nu) e1 + sin(nu) e2
_PERP: dict[str, tuple[str, str]] = {"x": ("z", "y"), "y": ("x", "z"), "z": ("x", "y")}
_SNAP = 1e-14
BRACKET_FLOOR = 1e-12
MOMENT_KEYS = ("jx", "jy", "jz", "jxx", "jyy", "jzz", "jxy", "jyz", "jzx")


@dataclass(frozen=True)
class OatObservables:
    n: int
    chi: float
    jx: float
    var_x: float
    p: float
    q: float

    @property
    def spread(self) -> float:
        return math.hypot(self.p, self.q)

    @property
    def phase(self) -> float:
        """Quadrant-aware atan(Q/P); the P -> 0 limit maps to +-pi/2."""
        return math.atan2(self.q, self.p)

    def var_z(self, nu: float | np.ndarray) -> float | np.ndarray:
        """Var of e^{i nu J_x} J_z e^{-i nu J_x}."""
        return self.n / 4.0 * (1.0 + (self.n - 1) / 4.0 * (self.p - self.spread * np.cos(2 * nu + self.phase)))

    def var_y(self, nu: float | np.ndarray) -> float | np.ndarray:
        return self.n / 4.0 * (1.0 + (self.n - 1) / 4.0 * (self.p + self.spread * np.cos(2 * nu + self.phase)))


def _pq(n: int, chi: float) -> tuple[float, float]:
    p = 1.0 - math.cos(2 * chi) ** (n - 2)
    q = 4.0 * math.sin(chi) * math.cos(chi) ** (n - 2)
    return (0.0 if abs(p) < _SNAP else p), (0.0 if abs(q) < _SNAP else q)


def oat_observables(n: int, chi: float) -> OatObservables:
    if n < 1:
        raise InputError("spin count must be >= 1")
    if n == 1:
        return OatObservables(n=1, chi=chi, jx=0.5, var_x=0.0, p=0.0, q=0.0)
    p, q = _pq(n, chi)
    jx_mean = n / 2.0 * math.cos(chi) ** (n - 1)
    var_x = n / 4.0 * (n - (n - 1) / 2.0 * p) - jx_mean**2
    return OatObservables(n=n, chi=chi, jx=jx_mean, var_x=var_x, p=p, q=q)


def nu_optimal(n: int, chi: float) -> tuple[float, float]:
    """(nu minimizing Var J_z(nu), nu + pi/2 minimizing Var J_y(nu))."""
    obs = oat_observables(n, chi)
    nu = -0.5 * obs.phase if obs.spread > 0 else 0.0
    return nu, nu + math.pi / 2.0


def xi2_ideal(n: int, chi: float) -> float:
    obs = oat_observables(n, chi)
    if n == 1:
        return 1.0
    signal = math.cos(chi) ** (n - 1)
    return (1.0 + (n - 1) / 4.0 * (obs.p - obs.spread)) / signal**2


def xi2_spread(n: int, chi: float) -> float:
    """4 min Var(J_perp) / N: the spin-variance parameter, without the signal normalization."""
    obs = oat_observables(n, chi)
    if n == 1:
        return 1.0
    return 1.0 + (n - 1) / 4.0 * (obs.p - obs.spread)


def optimal_oat(n: int, grid_points: int = 400, normalized: bool = True) -> tuple[float, float]:
    """(chi, xi^2) at the first squeezing minimum of the closed form.

    `normalized=False` minimizes the spin-variance parameter instead, which is
    what the large-N law 3^(1/3) / (sqrt(2) N^(1/3)) describes.
    """
    if n < 3:
        raise InputError("one-axis twisting squeezes only for n >= 3")
    target = xi2_ideal if normalized else xi2_spread
    upper = min(0.49 * math.pi, 6.0 * n ** (-2.0 / 3.0))
    grid = np.linspace(upper / grid_points, upper, grid_points)
    values = np.array([target(n, c) for c in grid])
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)] if i > 0 else grid[0] * 0.5
    hi = grid[min(i + 1, grid_points - 1)]
    res = minimize_scalar(lambda c: target(n, c), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


@dataclass(frozen=True)
class SqueezingReport:
    xi2: float
    nu_opt: float
    jx_mean: float
    var_min: float
    var_max: float
    t_opt: float | None = None
    mean_axis: str = "x"
    signal_vanished: bool = False


def moment_observables(n: int, basis: Basis) -> dict[str, OperatorMatrix]:
    """Collective first and symmetrized second moments, keyed as in MOMENT_KEYS."""
    x, y, z = jx(n, basis), jy(n, basis), jz(n, basis)
    return {
        "jx": x,
        "jy": y,
        "jz": z,
        "jxx": x @ x,
        "jyy": y @ y,
        "jzz": z @ z,
        "jxy": (x @ y + y @ x) / 2.0,
        "jyz": (y @ z + z @ y) / 2.0,
        "jzx": (z @ x + x @ z) / 2.0,
    }


def collective_moments(state: StateVector) -> dict[str, float]:
    return {key: expectation(state, op) for key, op in moment_observables(state.n, state.basis).items()}


def _second(moments: Mapping[str, float], a: str, b: str) -> float:
    if a == b:
        return moments[f"j{a}{a}"]
    for key in (f"j{a}{b}", f"j{b}{a}"):
        if key in moments:
            return moments[key]
    raise KeyError(f"missing second moment for {a}{b}")


def xi2_from_moments(
    moments: Mapping[str, float],
    n: int,
    mean_axis: Axis = "x",
    signal: float | None = None,
) -> SqueezingReport:
    """Wineland xi^2 = N min_nu Var(J_perp(nu)) / <J_mean>^2 from collective moments.

    The minimum over the perpendicular plane is the smaller eigenvalue of the
    2x2 covariance, so no line search is needed. `signal` replaces the
    measured mean spin, e.g. by its noiseless value.
    """
    if mean_axis not in _PERP:
        raise InputError(f"unknown mean axis {mean_axis!r}")
    e1, e2 = _PERP[mean_axis]
    m1, m2 = moments[f"j{e1}"], moments[f"j{e2}"]
    c11 = moments[f"j{e1}{e1}"] - m1 * m1
    c22 = moments[f"j{e2}{e2}"] - m2 * m2
    c12 = _second(moments, e1, e2) - m1 * m2
    half_sum, half_diff = 0.5 * (c11 + c22), 0.5 * (c11 - c22)
    radius = math.hypot(half_diff, c12)
    var_min, var_max = max(half_sum - radius, 0.0), half_sum + radius
    nu_opt = 0.5 * math.atan2(-c12, -half_diff) if radius > 0 else 0.0
    signal = moments[f"j{mean_axis}"] if signal is None else signal
    vanished = abs(signal) < 1e-9 * max(n, 1)
    if vanished:
        log_event(get_logger(), "WARN", "squeezing_signal_vanished", n=n, mean_axis=mean_axis, signal=signal)
        xi2 = math.inf
    else:
        xi2 = n * var_min / signal**2
    return SqueezingReport(
        xi2=xi2,
        nu_opt=nu_opt,
        jx_mean=signal,
        var_min=var_min,
        var_max=var_max,
        mean_axis=mean_axis,
        signal_vanished=vanished,
    )


def xi2_metrological(state: StateVector, mean_axis: Axis = "x") -> SqueezingReport:
    return xi2_from_moments(collective_moments(state), state.n, mean_axis)


def xi_heuristic(state: StateVector, i_axis: Axis, j_axis: Axis) -> float:
    """Delta J_i / sqrt(<J_j> / 2)."""
    ops = {"x": jx, "y": jy, "z": jz}
    spread = math.sqrt(variance(state, ops[i_axis](state.n, state.basis)))
    mean = expectation(state, ops[j_axis](state.n, state.basis))
    if mean <= 0:
        raise InputError(f"<J_{j_axis}> must be positive for the heuristic parameter, got {mean:.3e}")
    return spread / math.sqrt(mean / 2.0)


def _ratio(obs: OatObservables) -> float:
    return obs.p / obs.spread if obs.spread > 0 else 0.0


def _finish(n: int, chi: float, bracket: float, formula: str, gamma_t: float) -> float:
    numerator = 1.0 + (n - 1) / 4.0 * bracket
    if numerator <= 0.0:
        log_event(get_logger(), "WARN", "xi2_formula_clamped", formula=formula, n=n, chi=chi, gamma_t=gamma_t, raw=numerator)
        numerator = BRACKET_FLOOR
    return numerator / math.cos(chi) ** (2 * n - 2)


def xi2_noisy_unprotected(n: int, chi: float, gamma_t: float) -> float:
    """Single-spin dephasing without gap protection; x = N Gamma t."""
    obs = oat_observables(n, chi)
    r = _ratio(obs)
    x = n * gamma_t
    decay = math.exp(-x)
    bracket = decay * ((1.0 - decay) * obs.p * (r - 1.0) + obs.p - obs.spread)
    return _finish(n, chi, bracket, "unprotected", gamma_t)


def protected_bracket(n: int, chi: float, gamma_t: float) -> float:
    """Raw numerator of the gap-protected formula, before clamping."""
    obs = oat_observables(n, chi)
    r = _ratio(obs)
    y = gamma_t
    decay = math.exp(-y)
    bracket = decay * ((1.0 - decay) * obs.p * (r - 1.0) + 2.0 * math.sinh(y) * (1.0 - r) + obs.p - obs.spread)
    return 1.0 + (n - 1) / 4.0 * bracket


def xi2_noisy_protected(n: int, chi: float, gamma_t: float) -> float:
    """Gap-protected variant: the noise acts only through its collective average."""
    raw = protected_bracket(n, chi, gamma_t)
    return _finish(n, chi, (raw - 1.0) * 4.0 / (n - 1) if n > 1 else 0.0, "protected", gamma_t)


def xi2_noisy_dephasing_exact(n: int, chi: float, gamma_t: float) -> float:
    """Exact quasi-static Gaussian dephasing of the OAT state, normalized to the ideal signal.

    Two-spin coherences pick up e^{-2x} and spin-spin cross terms e^{-x}, x = N Gamma t.
    """
    obs = oat_observables(n, chi)
    x = n * gamma_t
    p = obs.p * math.exp(-2.0 * x)
    q = obs.q * math.exp(-x)
    numerator = 1.0 + (n - 1) / 4.0 * (p - math.hypot(p, q))
    return numerator / math.cos(chi) ** (2 * n - 2)
