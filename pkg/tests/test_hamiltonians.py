from __future__ import annotations

import math

import numpy as np
import pytest

from src.core.errors import InputError
from src.ensemble.geometry import coupling_mean, uniform_ensemble
from src.models.hamiltonians import (
    HamiltonianKind,
    HamiltonianSpec,
    build_hamiltonian,
    h_combined,
    h_double_quantum,
    h_heisenberg,
    h_ising,
    ideal_oat,
    ideal_tat,
    project_check,
)
from src.spins.evolution import CollectiveRotation
from src.spins.operators import X_AXIS, Z_AXIS, Basis, commutator, identity, j_squared, jx, jy, jz
from tests.conftest import pair_ensemble, random_slab


def test_ising_pair_matrix():
    d = 0.7
    assert np.allclose(h_ising(pair_ensemble(d)).data, np.diag([d / 2, -d / 2, -d / 2, d / 2]))


def test_ising_symmetries(slab4):
    h = h_ising(slab4)
    assert np.linalg.norm(commutator(h, jz(4)).data) < 1e-12
    flip = CollectiveRotation(X_AXIS, math.pi).matrix(4, Basis.FULL).data
    flipped = flip.conj().T @ h.data @ flip
    assert np.allclose(np.sort(np.linalg.eigvalsh(flipped)), np.sort(np.linalg.eigvalsh(h.data)), atol=1e-12)
    assert np.allclose(flipped, h.data, atol=1e-12)


def test_heisenberg_pair_spectrum():
    d = 0.9
    values = np.sort(np.linalg.eigvalsh(h_heisenberg(pair_ensemble(d)).data))
    assert np.allclose(values, [-1.5 * d, 0.5 * d, 0.5 * d, 0.5 * d])


def test_heisenberg_is_isotropic(slab4):
    h = h_heisenberg(slab4)
    for op in (jx(4), jy(4), jz(4), j_squared(4)):
        assert np.linalg.norm(commutator(h, op).data) < 1e-12 * max(1.0, h.norm())


def test_double_quantum_structure(slab4):
    h = h_double_quantum(slab4)
    assert abs(np.trace(h.data)) < 1e-12
    rot = CollectiveRotation(Z_AXIS, math.pi / 2).matrix(4, Basis.FULL).data
    assert np.allclose(rot.conj().T @ h.data @ rot, -h.data, atol=1e-12)
    pair = h_double_quantum(pair_ensemble(0.5)).data
    mask = np.ones((4, 4), dtype=bool)
    mask[0, 3] = mask[3, 0] = False
    assert np.allclose(pair[mask], 0.0)
    assert abs(pair[0, 3]) > 0


def test_combined_limits(slab4):
    assert np.allclose(h_combined(slab4, 0.0, "1a").data, h_heisenberg(slab4).data)
    h1a = h_combined(slab4, 0.2, "1a")
    assert h1a.is_hermitian and h_combined(slab4, 0.2, "2a").is_hermitian
    assert np.linalg.norm(commutator(h1a, jz(4)).data) < 1e-12
    with pytest.raises(InputError):
        h_combined(slab4, 0.1, "3a")


def test_ideal_generators():
    assert np.allclose(ideal_oat(2.0, 1).data, 0.5 * np.eye(2))
    n, d = 6, 1.3
    xy = ideal_tat(d, n, "xy")
    pm = ideal_tat(d, n, "pm")
    # rot = e^{i pi/4 J_z}
    rot = CollectiveRotation(Z_AXIS, -math.pi / 4).matrix(n, Basis.DICKE).data
    rotated = rot @ xy.data @ rot.conj().T
    assert np.linalg.norm(rotated - pm.data) < 1e-12 * max(1.0, xy.norm())
    assert pm.is_hermitian


def test_build_hamiltonian_dispatch(slab4):
    spec = HamiltonianSpec(kind=HamiltonianKind.COMBINED_2A, epsilon=0.1)
    assert np.allclose(build_hamiltonian(spec, slab4).data, h_combined(slab4, 0.1, "2a").data)
    assert build_hamiltonian(HamiltonianSpec(kind=HamiltonianKind.IDEAL_OAT, d=1.0), n=5).basis is Basis.DICKE
    with pytest.raises(InputError):
        build_hamiltonian(HamiltonianSpec(kind=HamiltonianKind.ISING))
    with pytest.raises(InputError):
        HamiltonianSpec(kind=HamiltonianKind.COMBINED_1A, epsilon=-0.1)


def test_projection_two_spins():
    d = 0.6
    fit = project_check(pair_ensemble(d), "zz")
    assert fit.c_quad == pytest.approx(d, rel=1e-12)
    assert fit.c_id == pytest.approx(-d / 2, rel=1e-12)
    assert fit.relative_residual < 1e-12


def test_projection_uniform_couplings_is_exact():
    ens = uniform_ensemble(5, 0.4)
    for target in ("zz", "dq"):
        fit = project_check(ens, target)
        assert fit.relative_residual < 1e-12
        assert fit.c_quad == pytest.approx(coupling_mean(ens) / 4, rel=1e-10)


@pytest.mark.parametrize("n", range(2, 9))
def test_projection_identity_on_random_geometries(n):
    for seed in range(10):
        ens = random_slab(n, seed)
        for target in ("zz", "dq"):
            fit = project_check(ens, target)
            assert fit.satisfies_contract, (n, seed, target, fit)


def test_projection_rejects_unknown_target(slab4):
    with pytest.raises(InputError):
        project_check(slab4, "xy")


def test_identity_helper_shape():
    assert identity(3, Basis.DICKE).dim == 4
