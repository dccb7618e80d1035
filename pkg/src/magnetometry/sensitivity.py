"""Ensemble magnetometer sensitivity model and its optimization over time, density and conversion.

Times are in us internally; the sensitivity itself is returned in T/sqrt(Hz).
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from src.analysis.scaling import ScalingRegime, scaling_predictions
from src.analysis.squeezing import xi2_ideal
from src.core.errors import InputError
from src.core.logger import get_logger, log_event
from src.core.units import CM3_TO_NM3, HBAR_OVER_GMUB, J0, US_PER_S
from src.ensemble.gaps import GapKind, gap_estimate
from src.ensemble.geometry import nearest_neighbour_coupling
from src.sequences.pulses import pulse_error_contrast
from src.sequences.templates import reference_alpha_tilde

# largest exponent math.exp accepts
_LOG_FLOAT_MAX = math.log(sys.float_info.max)


class Scheme(str, Enum):
    ECHO_ONLY = "echo_only"
    CPMG = "cpmg"
    MREV8 = "mrev8"
    SQUEEZE_1A = "squeeze_1a"
    SQUEEZE_2A = "squeeze_2a"

    @property
    def n_pulses(self) -> int:
        return {"echo_only": 1, "cpmg": 2}.get(self.value, 34)

    @property
    def uses_multipulse(self) -> bool:
        return self in (Scheme.MREV8, Scheme.SQUEEZE_1A, Scheme.SQUEEZE_2A)

    @property
    def squeezes(self) -> bool:
        return self in (Scheme.SQUEEZE_1A, Scheme.SQUEEZE_2A)


class Mode(str, Enum):
    SEQUENTIAL = "sequential"
    CONCURRENT = "concurrent"


DEFAULT_DENSITIES_CM3 = (2e15, 1e18)
DEFAULT_SWEEP_POINTS = 31
ADVANTAGE_RTOL = 1e-9


@dataclass(frozen=True)
class SensitivityConfig:
    """Magnetometer parameters in internal units (nm^3, nm^-3, us, rad/us)."""

    volume: float = 9.0e5
    density: float = 1.0e-3
    conversion: float = 0.9
    contrast: float = 1.0
    t2: float = 300.0
    tau: float = 1.5
    scheme: Scheme = Scheme.ECHO_ONLY
    mode: Mode = Mode.SEQUENTIAL
    ac_frequency: float = 2.0 * math.pi * 22e-3
    alpha_tilde: float | None = None
    decay_power: float = 2.0
    epsilon_fraction: float = 0.7
    pulse_error: float = 0.0

    def __post_init__(self) -> None:
        if min(self.volume, self.density, self.t2, self.tau, self.ac_frequency) <= 0:
            raise InputError("volume, density, T2, tau and AC frequency must be positive")
        if not 0.0 < self.conversion <= 1.0:
            raise InputError(f"conversion efficiency must be in (0, 1], got {self.conversion}")
        if not 0.0 < self.contrast <= 1.0:
            raise InputError(f"contrast must be in (0, 1], got {self.contrast}")
        if self.density * self.volume < 1.0:
            raise InputError("the sensing volume holds less than one spin")
        if not 0.0 < self.epsilon_fraction <= 1.0:
            raise InputError("epsilon_fraction must be in (0, 1]")

    @property
    def spin_count(self) -> float:
        return self.density * self.volume

    @property
    def alpha(self) -> float:
        """alpha-tilde in us^-2 nm^18, derived from the third-order moment at tau unless given; zero for pulse-free schemes."""
        if not self.scheme.uses_multipulse:
            return 0.0
        if self.alpha_tilde is not None:
            return self.alpha_tilde
        return reference_alpha_tilde(self.tau, "1a" if self.scheme is Scheme.SQUEEZE_1A else "2a")

    @property
    def effective_contrast(self) -> float:
        return pulse_error_contrast(self.contrast, self.pulse_error, self.scheme.n_pulses)


def t_epr(n_s: float, f: float) -> float:
    """Dephasing time from unconverted paramagnetic impurities, n_epr = n_s (1 - f) / f."""
    if not 0.0 < f <= 1.0:
        raise InputError(f"conversion efficiency must be in (0, 1], got {f}")
    if n_s <= 0:
        raise InputError("density must be positive")
    if f == 1.0:
        return math.inf
    return 4.0 * f / ((1.0 - f) * J0 * n_s)


def t_dipolar(n_s: float) -> float:
    """The same bath estimate applied to the sensing spins themselves."""
    if n_s <= 0:
        raise InputError("density must be positive")
    return 4.0 / (J0 * n_s)


def sensitivity_ideal(n: float, t: float, total: float, xi: float) -> float:
    """Delta B = hbar/(g muB) xi / sqrt(N t T) in tesla, t and T in us."""
    if n <= 0 or t <= 0 or total <= 0:
        raise InputError("spin count and times must be positive")
    return HBAR_OVER_GMUB * xi / math.sqrt(n * (t / US_PER_S) * (total / US_PER_S))


def _signal_time(config: SensitivityConfig, total: float, t_sqz: float) -> float:
    if config.mode is Mode.SEQUENTIAL:
        return total - t_sqz
    if total < t_sqz:
        raise InputError(f"concurrent interrogation T={total} us is shorter than the squeezing time {t_sqz} us")
    return total


def log_sensitivity_eta(config: SensitivityConfig, total: float, t_sqz: float = 0.0, xi: float = 1.0) -> float:
    """Natural log of sensitivity_eta; finite where the decay factor overflows a float."""
    if total <= 0 or t_sqz < 0:
        raise InputError("interrogation time must be positive and squeezing time non-negative")
    t = _signal_time(config, total, t_sqz)
    if t <= 0:
        raise InputError(f"no signal time left: T={total} us, t_sqz={t_sqz} us")
    decay = (total / config.t2) ** 3
    decay += total / t_epr(config.density, config.conversion)
    decay += config.alpha * config.density**6 * total**config.decay_power
    prefactor = HBAR_OVER_GMUB * 3.0 * math.pi / (config.effective_contrast * math.sqrt(2.0 * config.spin_count * t / US_PER_S))
    return math.log(prefactor * xi) + decay


def sensitivity_eta(config: SensitivityConfig, total: float, t_sqz: float = 0.0, xi: float = 1.0) -> float:
    """Sensitivity per root averaging time, T/sqrt(Hz); inf once the decay overflows."""
    log_eta = log_sensitivity_eta(config, total, t_sqz, xi)
    return math.exp(log_eta) if log_eta < _LOG_FLOAT_MAX else math.inf


def time_bracket(config: SensitivityConfig, t_sqz: float = 0.0) -> tuple[float, float]:
    """Admissible interrogation times: one pulse cycle, half an AC period, up to 10 T2."""
    lower = max(config.tau * config.scheme.n_pulses, math.pi / config.ac_frequency)
    if config.mode is Mode.SEQUENTIAL:
        lower += t_sqz
    else:
        lower = max(lower, t_sqz)
    upper = 10.0 * config.t2
    if lower >= upper:
        raise InputError(f"degenerate time bracket [{lower:.4g}, {upper:.4g}] us for scheme {config.scheme.value}")
    return lower, upper


@dataclass(frozen=True)
class TimeOptimum:
    total: float
    eta: float


def optimize_time(config: SensitivityConfig, t_sqz: float = 0.0, xi: float = 1.0) -> TimeOptimum:
    lower, upper = time_bracket(config, t_sqz)

    def objective(log_t: float) -> float:
        return log_sensitivity_eta(config, math.exp(log_t), t_sqz, xi)

    res = minimize_scalar(
        objective,
        bounds=(math.log(lower), math.log(upper)),
        method="bounded",
        options={"xatol": 1e-6},
    )
    total = float(math.exp(res.x))
    return TimeOptimum(total=total, eta=sensitivity_eta(config, total, t_sqz, xi))


@dataclass(frozen=True)
class SqueezingPoint:
    xi: float
    t_sqz: float
    source: str
    capped: bool = False


def squeezing_model(config: SensitivityConfig) -> SqueezingPoint:
    """xi and squeezing time for the scheme from the projected scaling laws.

    The projected strength epsilon*D is held at `epsilon_fraction` of the
    dipolar-lattice gap estimate so the dynamics stay in the protected
    manifold. The squeezing time is capped at T_epr / 2.
    """
    if not config.scheme.squeezes:
        return SqueezingPoint(xi=1.0, t_sqz=0.0, source="none")
    n = config.spin_count
    n_int = int(round(n))
    if n_int < 3:
        return SqueezingPoint(xi=1.0, t_sqz=0.0, source="none")
    d_0 = nearest_neighbour_coupling(config.density)
    eps_d = config.epsilon_fraction * gap_estimate(GapKind.LATTICE_DIPOLAR, n_int, d_0)
    if config.scheme is Scheme.SQUEEZE_1A:
        xi_opt = scaling_predictions(n_int, eps_d, ScalingRegime.OAT_IDEAL).xi_opt
        t_opt = scaling_predictions(n_int, eps_d, ScalingRegime.OAT_PROJECTED).t_opt
    else:
        pred = scaling_predictions(n_int, eps_d, ScalingRegime.TAT_PROJECTED)
        xi_opt, t_opt = pred.xi_opt, pred.t_opt
    assert xi_opt is not None and t_opt is not None
    cap = 0.5 * t_epr(config.density, config.conversion)
    if t_opt <= cap:
        return SqueezingPoint(xi=min(1.0, xi_opt), t_sqz=t_opt, source="scaling")
    t = cap
    if config.scheme is Scheme.SQUEEZE_1A:
        chi = eps_d * t / (n_int - 1)
        xi = math.sqrt(max(xi2_ideal(n_int, chi), 0.0))
    else:
        xi = xi_opt ** (t / t_opt)
    log_event(
        get_logger(),
        "DEBUG",
        "squeezing_time_capped",
        scheme=config.scheme.value,
        n=n_int,
        t_opt=t_opt,
        cap=cap,
        xi=xi,
    )
    return SqueezingPoint(xi=min(1.0, xi), t_sqz=t, source="scaling_capped", capped=True)


@dataclass(frozen=True)
class SweepPoint:
    density_cm3: float
    n: float
    total: float
    t_sqz: float
    xi: float
    eta: float
    xi_source: str


@dataclass(frozen=True)
class SensitivityCurve:
    scheme: Scheme
    points: tuple[SweepPoint, ...]
    meta: dict = field(default_factory=dict)

    @property
    def etas(self) -> np.ndarray:
        return np.array([p.eta for p in self.points])

    @property
    def densities_cm3(self) -> np.ndarray:
        return np.array([p.density_cm3 for p in self.points])


def evaluate_point(config: SensitivityConfig) -> SweepPoint:
    sq = squeezing_model(config)
    best = optimize_time(config, sq.t_sqz, sq.xi)
    return SweepPoint(
        density_cm3=config.density / CM3_TO_NM3,
        n=config.spin_count,
        total=best.total,
        t_sqz=sq.t_sqz,
        xi=sq.xi,
        eta=best.eta,
        xi_source=sq.source,
    )


def default_densities(points: int = DEFAULT_SWEEP_POINTS) -> np.ndarray:
    """Log-spaced densities in nm^-3."""
    lo, hi = DEFAULT_DENSITIES_CM3
    return np.geomspace(lo, hi, points) * CM3_TO_NM3


def density_sweep(
    config: SensitivityConfig,
    densities: Sequence[float] | np.ndarray,
    schemes: Sequence[Scheme],
) -> list[SensitivityCurve]:
    curves = []
    for scheme in schemes:
        points = tuple(evaluate_point(replace(config, density=float(n_s), scheme=scheme)) for n_s in densities)
        curves.append(
            SensitivityCurve(
                scheme=scheme,
                points=points,
                meta={"conversion": config.conversion, "mode": config.mode.value, "t2": config.t2, "tau": config.tau},
            )
        )
    log_event(
        get_logger(),
        "INFO",
        "density_sweep_done",
        schemes=[s.value for s in schemes],
        points=len(densities),
        conversion=config.conversion,
    )
    return curves


def cpmg_reference(config: SensitivityConfig, densities: Sequence[float] | np.ndarray) -> SensitivityCurve:
    return density_sweep(config, densities, [Scheme.CPMG])[0]


def squeeze_advantage(config: SensitivityConfig, densities: Sequence[float] | np.ndarray, scheme: Scheme = Scheme.SQUEEZE_2A) -> bool:
    """True when `scheme` beats the echo baseline at some density where it actually squeezes.

    Below three spins the squeezing scheme reduces to echo and the two optima
    differ only by optimizer noise, so those densities never count.
    """
    echo, squeezed = density_sweep(config, densities, [Scheme.ECHO_ONLY, scheme])
    squeezes = np.array([p.xi < 1.0 for p in squeezed.points])
    return bool(np.any(squeezes & (squeezed.etas < echo.etas * (1.0 - ADVANTAGE_RTOL))))


def crossover_fraction(
    config: SensitivityConfig,
    densities: Sequence[float] | np.ndarray,
    scheme: Scheme = Scheme.SQUEEZE_2A,
    lo: float = 0.05,
    hi: float = 0.99,
    tol: float = 1e-3,
) -> float | None:
    """Smallest conversion efficiency at which `scheme` first beats echo, by bisection."""
    if not squeeze_advantage(replace(config, conversion=hi), densities, scheme):
        log_event(get_logger(), "WARN", "no_squeezing_advantage", scheme=scheme.value, conversion=hi)
        return None
    if squeeze_advantage(replace(config, conversion=lo), densities, scheme):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if squeeze_advantage(replace(config, conversion=mid), densities, scheme):
            hi = mid
        else:
            lo = mid
    return hi
