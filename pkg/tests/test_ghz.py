from __future__ import annotations

import math

import numpy as np
import pytest

from src.analysis.ghz import ghz_branches, ghz_fidelity, ghz_state, oat_ghz_axis
from src.core.errors import InputError
from src.models.engineered_chain import (
    calibrate_field_scale,
    chain_couplings,
    engineered_chain,
    field_profile,
    ghz_time,
    mirror_field_scale,
)
from src.models.hamiltonians import ideal_oat
from src.spins.evolution import evolve
from src.spins.operators import SZ, X_AXIS, Y_AXIS, Z_AXIS, Basis, coherent_state, embed_single


@pytest.mark.parametrize("n", range(2, 9))
def test_oat_reaches_ghz_at_half_period(n):
    d = 0.8
    final = evolve(coherent_state(X_AXIS, n, Basis.DICKE), ideal_oat(d, n), math.pi / (2 * d))
    assert ghz_fidelity(final, n, oat_ghz_axis(n)) >= 1 - 1e-9


def test_cat_axis_alternates_with_parity():
    assert oat_ghz_axis(4) is X_AXIS
    assert oat_ghz_axis(5) is Y_AXIS


@pytest.mark.parametrize("basis", [Basis.FULL, Basis.DICKE])
def test_fidelity_of_reference_states(basis):
    n = 4
    assert ghz_fidelity(ghz_state(n, X_AXIS, basis), n, X_AXIS, "printed") == pytest.approx(1.0, abs=1e-12)
    assert ghz_fidelity(ghz_state(n, X_AXIS, basis, phase=1j), n, X_AXIS) == pytest.approx(1.0, abs=1e-12)
    assert ghz_fidelity(coherent_state(X_AXIS, n, basis), n, X_AXIS) == pytest.approx(0.5, abs=1e-12)


def test_printed_phase_is_sensitive_to_relative_phase():
    n = 3
    state = ghz_state(n, X_AXIS, Basis.DICKE, phase=-((-1j) ** (n + 1)))
    assert ghz_fidelity(state, n, X_AXIS, "printed") == pytest.approx(0.0, abs=1e-12)
    assert ghz_fidelity(state, n, X_AXIS, "best") == pytest.approx(1.0, abs=1e-12)


def test_branch_amplitudes():
    a, b = ghz_branches(coherent_state(Z_AXIS, 3), Z_AXIS)
    assert abs(a) == pytest.approx(1.0)
    assert abs(b) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_validation():
    with pytest.raises(InputError):
        ghz_fidelity(coherent_state(X_AXIS, 3), 4)
    with pytest.raises(InputError):
        ghz_fidelity(coherent_state(X_AXIS, 3), 3, relative_phase="other")


def test_chain_coupling_profile():
    n, d_0 = 6, 1.1
    d = chain_couplings(n, d_0)
    assert np.allclose(d, d[::-1])
    assert d.max() == pytest.approx(d_0)
    assert np.allclose(field_profile(n), field_profile(n)[::-1])


def test_chain_hamiltonian_is_hermitian():
    chain = engineered_chain(4, 1.0)
    assert chain.hamiltonian.is_hermitian
    assert chain.field_scale == pytest.approx(mirror_field_scale(4, 1.0))
    assert mirror_field_scale(4, 1.0) == pytest.approx(0.25)
    assert ghz_time(4, 1.0) == pytest.approx(2.0 * math.pi)


def test_chain_coupling_uses_the_ordered_pair_convention():
    n, d_0 = 5, 0.7
    chain = engineered_chain(n, d_0)
    d = chain_couplings(n, d_0)
    expected = sum(2.0 * d[k] * (embed_single(SZ, k, n).data @ embed_single(SZ, k + 1, n).data) for k in range(n - 1))
    assert np.allclose(chain.h_coupling.data, expected, atol=1e-12)


def test_chain_field_scan_reaches_ghz():
    scan = calibrate_field_scale(4, 1.0)
    assert scan.best_fidelity > 0.99
    assert scan.fidelities.shape == scan.scales.shape


def test_chain_needs_two_spins():
    with pytest.raises(InputError):
        engineered_chain(1, 1.0)
