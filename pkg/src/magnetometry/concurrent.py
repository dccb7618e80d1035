"""Error made by sensing while squeezing: one combined generator versus the sequential product."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.core.errors import InputError
from src.models.hamiltonians import Variant, ideal_oat, ideal_tat
from src.spins.evolution import evolve
from src.spins.operators import X_AXIS, Z_AXIS, Basis, coherent_state, jx, jy, jz


@dataclass(frozen=True)
class ConcurrentError:
    estimate: float
    simulated: float
    t: float
    nu: float


def concurrent_error(n: int, coupling_mean: float, phi: float, variant: Variant, nu: float = math.pi / 4) -> ConcurrentError:
    """Compare e^{-i(H t + phi F)}|psi> with e^{-i phi F} e^{-i H t}|psi> at the optimal squeezing time.

    1a: H = d J_z^2 from |+x>, F = J_z cos(nu) + J_y sin(nu).
    2a: H = d (J_x^2 - J_y^2)/2 from |+z>, F along the diagonal (J_y - J_x)/sqrt(2).
    d = D/(N - 1); the simulated error is sqrt(1 - |<a|b>|^2).
    """
    if n < 2:
        raise InputError("concurrent error needs n >= 2")
    if coupling_mean == 0:
        raise InputError("coupling mean must be nonzero")
    d = coupling_mean / (n - 1)
    basis = Basis.DICKE
    if variant == "1a":
        h = ideal_oat(d, n, basis)
        t = 3.0 ** (1.0 / 6.0) / (abs(d) * n ** (2.0 / 3.0))
        psi = coherent_state(X_AXIS, n, basis)
        field = math.cos(nu) * jz(n, basis) + math.sin(nu) * jy(n, basis)
        estimate = abs(phi * coupling_mean * t * math.sin(nu))
    elif variant == "2a":
        h = ideal_tat(d, n, "xy", basis)
        t = math.log(2.0 * n / math.sqrt(3.0)) / (abs(d) * n)
        psi = coherent_state(Z_AXIS, n, basis)
        field = (jy(n, basis) - jx(n, basis)) / math.sqrt(2.0)
        estimate = abs(phi * coupling_mean) * math.log(n) / n
    else:
        raise InputError(f"unknown variant {variant!r}")
    sequential = evolve(evolve(psi, h, t), field, phi) if phi != 0 else evolve(psi, h, t)
    combined = evolve(psi, h + (phi / t) * field, t)
    fidelity = abs(sequential.overlap(combined)) ** 2
    return ConcurrentError(estimate=estimate, simulated=float(np.sqrt(max(0.0, 1.0 - fidelity))), t=t, nu=nu)
