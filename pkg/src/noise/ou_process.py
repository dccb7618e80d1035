"""Ornstein-Uhlenbeck field paths with exponential correlation variance * e^{-|t|/tau_c}."""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import lfilter

from src.core.errors import InputError


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory `index`; depends only on (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _check(tau_c: float, variance: float, dt: float) -> None:
    if tau_c <= 0 or dt <= 0:
        raise InputError("tau_c and dt must be positive")
    if variance < 0:
        raise InputError("variance must be >= 0")


def sample_ou_paths(
    tau_c: float,
    variance: float,
    dt: float,
    n_steps: int,
    n_paths: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """(n_paths, n_steps) stationary OU values, exact discretization on a dt grid."""
    _check(tau_c, variance, dt)
    if variance == 0.0:
        return np.zeros((n_paths, n_steps))
    a = math.exp(-dt / tau_c)
    kicks = rng.standard_normal((n_paths, n_steps))
    kicks[:, 0] *= math.sqrt(variance)
    kicks[:, 1:] *= math.sqrt(variance * (1.0 - a * a))
    return lfilter([1.0], [1.0, -a], kicks, axis=1)


def sample_ou(tau_c: float, variance: float, dt: float, duration: float, rng: np.random.Generator) -> np.ndarray:
    n_steps = max(1, int(math.ceil(duration / dt - 1e-9)))
    return sample_ou_paths(tau_c, variance, dt, n_steps, 1, rng)[0]


def collective_projection(paths: np.ndarray) -> np.ndarray:
    """omega_N(t) = (1/N) sum_k omega_k(t): the part of the noise seen inside the symmetric multiplet."""
    paths = np.atleast_2d(paths)
    return paths.mean(axis=0)


def per_spin_variance(gamma: float, tau_c: float, n: int) -> float:
    """OU variance making a product state's <J_x> decay as e^{-N gamma t} at long times."""
    return n * gamma / tau_c


def gamma_from_kernel(variance: float, tau_c: float, t: float, n: int = 1) -> float:
    """(1/2t) double integral of the averaged-noise correlation over [0, t]^2."""
    if t <= 0:
        raise InputError("t must be positive")
    _check(tau_c, variance, 1.0)
    return variance * tau_c / n * (1.0 - (tau_c / t) * -math.expm1(-t / tau_c))
