from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.errors import InputError
from src.noise.ou_process import (
    collective_projection,
    gamma_from_kernel,
    per_spin_variance,
    sample_ou,
    sample_ou_paths,
    substream,
)


def test_zero_variance_gives_silent_paths():
    paths = sample_ou_paths(1.0, 0.0, 0.1, 50, 3, substream(1, 0))
    assert paths.shape == (3, 50)
    assert not np.any(paths)


def test_stationary_statistics():
    tau_c, var, dt = 1.0, 2.0, 0.1
    paths = sample_ou_paths(tau_c, var, dt, 200, 4000, substream(42, 0))
    assert paths.mean() == pytest.approx(0.0, abs=0.05)
    assert paths.var() == pytest.approx(var, rel=0.05)
    # the first sample is already stationary
    assert paths[:, 0].var() == pytest.approx(var, rel=0.1)
    lag = 10
    autocov = np.mean(paths[:, :-lag] * paths[:, lag:])
    assert autocov == pytest.approx(var * math.exp(-lag * dt / tau_c), abs=0.05)


def test_substreams_are_reproducible_and_independent():
    a = substream(7, 3).standard_normal(5)
    b = substream(7, 3).standard_normal(5)
    c = substream(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_sample_ou_covers_the_duration():
    path = sample_ou(1.0, 1.0, 0.3, 1.0, substream(0, 0))
    assert path.shape == (4,)
    assert sample_ou(1.0, 1.0, 0.5, 1.0, substream(0, 0)).shape == (2,)


@pytest.mark.parametrize("tau_c, var, dt", [(0.0, 1.0, 0.1), (1.0, -1.0, 0.1), (1.0, 1.0, 0.0)])
def test_rejects_bad_parameters(tau_c, var, dt):
    with pytest.raises(InputError):
        sample_ou_paths(tau_c, var, dt, 10, 1, substream(0, 0))


def test_gamma_from_kernel_limits():
    n, gamma, tau_c = 8, 3e-3, 100.0
    var = per_spin_variance(gamma, tau_c, n)
    assert var == pytest.approx(n * gamma / tau_c)
    # long times recover the rate the per-spin variance was built for
    assert gamma_from_kernel(var, tau_c, 1e9, n) == pytest.approx(gamma, rel=1e-6)
    # slow noise: Gamma grows linearly, var t / (2N)
    t = 1e-3 * tau_c
    assert gamma_from_kernel(var, tau_c, t, n) == pytest.approx(var * t / (2 * n), rel=1e-3)
    with pytest.raises(InputError):
        gamma_from_kernel(var, tau_c, 0.0)


def test_gamma_from_kernel_matches_quadrature():
    var, tau_c, t, n = 1.5, 2.0, 3.0, 4
    grid = np.linspace(0.0, t, 1201)
    kernel = var / n * np.exp(-np.abs(grid[:, None] - grid[None, :]) / tau_c)
    double = np.trapz(np.trapz(kernel, grid, axis=1), grid)
    assert gamma_from_kernel(var, tau_c, t, n) == pytest.approx(double / (2 * t), rel=1e-4)


def test_collective_projection_averages_the_spins():
    paths = sample_ou_paths(1.0, 4.0, 0.05, 400, 16, substream(5, 0))
    collective = collective_projection(paths)
    assert collective.shape == (400,)
    assert np.allclose(collective, paths.mean(axis=0))
    assert collective_projection(np.ones(5)).shape == (5,)
