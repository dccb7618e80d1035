from __future__ import annotations

import numpy as np
import pytest

from src.core.errors import InputError, SizeGuardError
from src.spins.operators import (
    ID2,
    SX,
    SZ,
    X_AXIS,
    Y_AXIS,
    Z_AXIS,
    Basis,
    SpinAxis,
    check_size,
    coherent_state,
    collective_op,
    commutator,
    dicke_restrict,
    embed_single,
    expectation,
    j_squared,
    jx,
    jy,
    jz,
    symmetric_projector,
    variance,
)
from src.analysis.ghz import ghz_state


def test_embed_single_identity_and_ordering():
    assert np.allclose(embed_single(ID2, 0, 3).data, np.eye(8))
    assert np.allclose(np.diag(embed_single(2 * SZ, 0, 2).data), [1, 1, -1, -1])


@pytest.mark.parametrize("n", range(1, 7))
def test_embed_single_pauli_is_traceless(n):
    for k in range(n):
        assert abs(np.trace(embed_single(2 * SX, k, n).data)) < 1e-12


def test_embed_single_rejects_bad_site():
    with pytest.raises(InputError):
        embed_single(SX, 3, 3)


def test_collective_z_two_spins():
    assert np.allclose(jz(2).data, np.diag([1, 0, 0, -1]))


@pytest.mark.parametrize("basis", [Basis.FULL, Basis.DICKE])
@pytest.mark.parametrize("n", range(1, 7))
def test_su2_commutators(n, basis):
    x, y, z = jx(n, basis), jy(n, basis), jz(n, basis)
    assert np.linalg.norm((commutator(x, y) - 1j * z).data) < 1e-12
    assert np.linalg.norm((commutator(y, z) - 1j * x).data) < 1e-12
    assert np.linalg.norm((commutator(z, x) - 1j * y).data) < 1e-12


def test_jz_spectrum_four_spins():
    values, counts = np.unique(np.round(np.real(np.diag(jz(4).data)), 12), return_counts=True)
    assert values.tolist() == [-2, -1, 0, 1, 2]
    assert counts.tolist() == [1, 4, 6, 4, 1]


def test_collective_op_along_tilted_axis():
    axis = SpinAxis.of(1.0, 1.0, 0.0)
    op = collective_op(axis, 3, Basis.DICKE)
    expected = (jx(3, Basis.DICKE) + jy(3, Basis.DICKE)) / np.sqrt(2.0)
    assert np.allclose(op.data, expected.data)


@pytest.mark.parametrize("basis", [Basis.FULL, Basis.DICKE])
def test_coherent_state_moments(basis):
    n = 5
    psi = coherent_state(X_AXIS, n, basis)
    assert psi.norm == pytest.approx(1.0, abs=1e-12)
    assert expectation(psi, jx(n, basis)) == pytest.approx(n / 2, abs=1e-12)
    assert variance(psi, jz(n, basis)) == pytest.approx(n / 4, abs=1e-12)
    assert variance(psi, jx(n, basis)) == pytest.approx(0.0, abs=1e-12)


def test_ghz_variance_along_cat_axis():
    n = 6
    ghz = ghz_state(n, X_AXIS, Basis.FULL)
    assert expectation(ghz, jx(n)) == pytest.approx(0.0, abs=1e-12)
    assert variance(ghz, jx(n)) == pytest.approx(n**2 / 4, abs=1e-10)


def test_symmetric_projector_ranks():
    assert np.allclose(symmetric_projector(1).data, np.eye(2))
    assert np.linalg.matrix_rank(symmetric_projector(2).data, tol=1e-10) == 3
    p = symmetric_projector(4)
    assert np.linalg.matrix_rank(p.data, tol=1e-10) == 5
    # the projector range is the J = 2 eigenspace of J^2
    j2 = j_squared(4)
    assert np.allclose(j2.data @ p.data, 6.0 * p.data, atol=1e-10)


def test_projector_annihilates_singlet_pairs():
    singlet = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2.0)
    state = np.kron(singlet, np.array([1, 0, 0, 0], dtype=complex))
    assert np.linalg.norm(symmetric_projector(4).data @ state) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_dicke_restriction_matches_dicke_operators(n):
    full = jx(n) @ jx(n) - jy(n) @ jz(n) @ jz(n) + jz(n)
    dicke = jx(n, Basis.DICKE) @ jx(n, Basis.DICKE) - jy(n, Basis.DICKE) @ jz(n, Basis.DICKE) @ jz(n, Basis.DICKE) + jz(n, Basis.DICKE)
    assert np.linalg.norm(dicke_restrict(full).data - dicke.data) < 1e-10


def test_expectation_rejects_non_hermitian():
    psi = coherent_state(Z_AXIS, 2)
    with pytest.raises(InputError):
        expectation(psi, jx(2) + 1j * jy(2))


def test_basis_mismatch_is_rejected():
    with pytest.raises(InputError):
        _ = jx(3) + jx(3, Basis.DICKE)


def test_size_guard(monkeypatch):
    monkeypatch.setenv("SPIN_SQUEEZE_N_MAX", "6")
    with pytest.raises(SizeGuardError):
        check_size(7, Basis.FULL)
    check_size(7, Basis.DICKE)


def test_uncertainty_bound_on_random_states():
    rng = np.random.default_rng(4)
    n = 4
    x, y, z = jx(n), jy(n), jz(n)
    from src.spins.operators import StateVector

    for _ in range(5):
        amps = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi = StateVector(amps / np.linalg.norm(amps), Basis.FULL, n)
        lhs = variance(psi, x) * variance(psi, y)
        assert lhs >= expectation(psi, z) ** 2 / 4 - 1e-12


def test_axis_validation():
    with pytest.raises(InputError):
        SpinAxis(1.0, 1.0, 0.0)
    with pytest.raises(InputError):
        SpinAxis.named("w")
    assert (-Y_AXIS).y == -1.0
