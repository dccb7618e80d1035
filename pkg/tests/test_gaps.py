from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.errors import InputError
from src.core.units import J0
from src.ensemble.gaps import GapKind, gap_estimate, gap_exact
from src.ensemble.geometry import uniform_ensemble
from tests.conftest import pair_ensemble


def test_gap_estimate_families():
    d_0 = 2.0
    assert gap_estimate(GapKind.CHAIN_NN, 10, d_0) == pytest.approx(d_0 / 100)
    assert gap_estimate(GapKind.LATTICE_NN, 16, d_0) == pytest.approx(d_0 / 16)
    assert gap_estimate(GapKind.LATTICE_DIPOLAR, 16, d_0) == pytest.approx(d_0 / 4)
    assert gap_estimate(GapKind.CHAIN_DIPOLAR, 10, d_0) == pytest.approx(d_0 * math.log(10) / 100)
    assert gap_estimate("random", 8, d_0, n_s=1e-3) == pytest.approx(J0 * (1e-3 / 8) * 4)


def test_random_estimate_needs_density():
    with pytest.raises(InputError):
        gap_estimate(GapKind.RANDOM, 8, 1.0)


@pytest.mark.parametrize("d", [0.3, -0.3])
def test_two_spin_gap_is_triplet_singlet_splitting(d):
    result = gap_exact(pair_ensemble(d))
    assert result.gap == pytest.approx(abs(d), rel=1e-12)
    assert not result.warning


@pytest.mark.parametrize("n", range(2, 9))
def test_uniform_gap(n):
    d = 0.25
    result = gap_exact(uniform_ensemble(n, d))
    assert result.gap == pytest.approx(d * n / 2, rel=1e-10)
    assert result.symmetric_energy == pytest.approx(-d * n * (n - 1) / 8, rel=1e-10)


def test_gap_accepts_raw_matrix():
    c = np.array([[0.0, 0.2, 0.1], [0.2, 0.0, 0.3], [0.1, 0.3, 0.0]])
    assert gap_exact(c).gap > 0


def test_gap_needs_two_spins():
    with pytest.raises(InputError):
        gap_estimate(GapKind.CHAIN_NN, 1, 1.0)
