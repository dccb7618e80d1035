"""Closed-form optimal squeezing and GHZ scaling laws, tagged by regime."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from src.core.errors import InputError


class ScalingRegime(str, Enum):
    OAT_IDEAL = "oat_ideal"
    TAT_IDEAL = "tat_ideal"
    OAT_PROJECTED = "oat_projected"
    TAT_PROJECTED = "tat_projected"
    OAT_NOISY_UNPROTECTED = "oat_noisy_unprotected"
    OAT_NOISY_PROTECTED = "oat_noisy_protected"
    GHZ_PROJECTED = "ghz_projected"


@dataclass(frozen=True)
class ScalingPrediction:
    regime: ScalingRegime
    xi_opt: float | None
    t_opt: float | None


def _oat_xi(n: int) -> float:
    return 3.0 ** (1.0 / 3.0) / (math.sqrt(2.0) * n ** (1.0 / 3.0))


def scaling_predictions(n: int, rate: float, regime: ScalingRegime, gamma: float = 0.0) -> ScalingPrediction:
    """Optimal xi and time for `regime`.

    `rate` is the uniform coupling d for the ideal and noisy regimes and the
    projected strength epsilon*D for the projected ones. Fields a regime does
    not define are None.
    """
    if n < 2:
        raise InputError("scaling laws need n >= 2")
    if rate <= 0:
        raise InputError(f"coupling rate must be positive, got {rate}")
    if gamma < 0:
        raise InputError(f"noise rate must be >= 0, got {gamma}")
    log_term = math.log(2.0 * n / math.sqrt(3.0))
    xi: float | None = None
    t: float | None = None
    if regime is ScalingRegime.OAT_IDEAL:
        xi, t = _oat_xi(n), 3.0 ** (1.0 / 6.0) / (rate * n ** (2.0 / 3.0))
    elif regime is ScalingRegime.TAT_IDEAL:
        xi, t = math.sqrt((1.0 + 2.0 * math.sqrt(3.0)) / (2.0 * n)), log_term / (rate * n)
    elif regime is ScalingRegime.OAT_PROJECTED:
        # projected coupling is epsilon*D/(N-1) per pair
        t = 3.0 ** (1.0 / 6.0) * (n - 1) / (rate * n ** (2.0 / 3.0))
        xi = _oat_xi(n)
    elif regime is ScalingRegime.TAT_PROJECTED:
        xi, t = 2.0 / math.sqrt(n), (n - 1) * log_term / (rate * n)
    elif regime is ScalingRegime.OAT_NOISY_UNPROTECTED:
        xi = 3.0 ** (1.0 / 3.0) / n ** (1.0 / 3.0) * math.sqrt((1.0 + (gamma / rate) ** 2) / 2.0)
    elif regime is ScalingRegime.OAT_NOISY_PROTECTED:
        xi = _oat_xi(n) + math.sqrt(gamma / (n * rate))
    elif regime is ScalingRegime.GHZ_PROJECTED:
        t = 0.5 * math.pi * n / rate
    else:
        raise InputError(f"unknown scaling regime {regime!r}")
    return ScalingPrediction(regime=regime, xi_opt=xi, t_opt=t)
