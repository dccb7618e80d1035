from __future__ import annotations

import math

import numpy as np
import pytest

from src.analysis import squeezing
from src.analysis.squeezing import (
    collective_moments,
    moment_observables,
    nu_optimal,
    oat_observables,
    optimal_oat,
    protected_bracket,
    xi2_from_moments,
    xi2_ideal,
    xi2_metrological,
    xi2_noisy_dephasing_exact,
    xi2_noisy_protected,
    xi2_noisy_unprotected,
    xi2_spread,
    xi_heuristic,
)
from src.core.errors import InputError
from src.models.hamiltonians import ideal_oat, ideal_tat
from src.spins.evolution import evolve
from src.spins.operators import X_AXIS, Z_AXIS, Basis, coherent_state, expectation, jx, jy, jz, variance

CHI_GRID = np.linspace(0.01, 1.0, 20)


def oat_state(n: int, chi: float):
    return evolve(coherent_state(X_AXIS, n, Basis.DICKE), ideal_oat(1.0, n), chi)


def test_coherent_limit():
    obs = oat_observables(7, 0.0)
    assert obs.jx == pytest.approx(3.5)
    assert obs.p == 0.0 and obs.q == 0.0
    assert np.allclose(obs.var_z(np.linspace(0, math.pi, 7)), 7 / 4)
    assert xi2_ideal(7, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("n", range(2, 13))
def test_closed_form_matches_dicke_simulation(n):
    x, y, z = jx(n, Basis.DICKE), jy(n, Basis.DICKE), jz(n, Basis.DICKE)
    for chi in CHI_GRID:
        psi = oat_state(n, float(chi))
        obs = oat_observables(n, float(chi))
        assert expectation(psi, x) == pytest.approx(obs.jx, abs=1e-10)
        assert variance(psi, x) == pytest.approx(obs.var_x, abs=1e-10)
        for nu in (0.0, 0.4, 1.3, 2.2):
            rotated = math.cos(nu) * z + math.sin(nu) * y
            assert variance(psi, rotated) == pytest.approx(float(obs.var_z(nu)), abs=1e-10)
            rotated_y = math.cos(nu) * y - math.sin(nu) * z
            assert variance(psi, rotated_y) == pytest.approx(float(obs.var_y(nu)), abs=1e-10)
        report = xi2_metrological(psi, "x")
        assert report.xi2 == pytest.approx(xi2_ideal(n, float(chi)), rel=1e-9)


def test_two_spin_hand_values():
    chi = math.pi / 4
    obs = oat_observables(2, chi)
    assert obs.p == 0.0
    assert obs.q == pytest.approx(4 * math.sin(chi))
    assert obs.jx == pytest.approx(math.cos(chi))
    assert obs.var_x == pytest.approx(math.sin(chi) ** 2, abs=1e-12)
    assert float(obs.var_z(math.pi / 4)) == pytest.approx(0.5 * (1 + math.sin(chi)), abs=1e-12)


def test_reference_numbers_six_spins():
    obs = oat_observables(6, 0.2)
    assert obs.p == pytest.approx(0.280297, abs=1e-6)
    assert obs.q == pytest.approx(0.733185, abs=1e-6)
    assert xi2_ideal(6, 0.2) == pytest.approx(0.45155, rel=1e-4)


def test_optimal_angle_minimizes_variance():
    n, chi = 8, 0.3
    obs = oat_observables(n, chi)
    nu_z, nu_y = nu_optimal(n, chi)
    grid = np.linspace(-math.pi, math.pi, 1000)
    assert float(obs.var_z(nu_z)) <= float(np.min(obs.var_z(grid))) + 1e-12
    assert float(obs.var_y(nu_y)) <= float(np.min(obs.var_y(grid))) + 1e-12
    assert nu_y - nu_z == pytest.approx(math.pi / 2)


def test_optimal_angle_limits():
    assert nu_optimal(8, 1e-6)[0] == pytest.approx(-math.pi / 4, abs=1e-4)
    # chi = pi/2 with even N: Q vanishes
    assert nu_optimal(6, math.pi / 2)[0] == pytest.approx(0.0, abs=1e-12)


def test_closed_form_minimum_matches_simulation():
    n = 8
    chi_opt, xi2_opt = optimal_oat(n)
    simulated = min(xi2_metrological(oat_state(n, float(c)), "x").xi2 for c in np.linspace(0.5 * chi_opt, 1.5 * chi_opt, 201))
    assert simulated >= xi2_opt - 1e-9
    assert xi2_metrological(oat_state(n, chi_opt), "x").xi2 == pytest.approx(xi2_opt, rel=1e-9)


@pytest.mark.parametrize("n", [50, 100, 500])
def test_large_n_scaling_law(n):
    chi, xi2 = optimal_oat(n, normalized=False)
    assert math.sqrt(xi2) == pytest.approx(3 ** (1 / 3) / (math.sqrt(2) * n ** (1 / 3)), rel=0.10)
    assert chi == pytest.approx(3 ** (1 / 6) / n ** (2 / 3), rel=0.15)


def test_spin_variance_parameter_at_scaling_time():
    n = 100
    chi = 3 ** (1 / 6) / n ** (2 / 3)
    assert math.sqrt(xi2_spread(n, chi)) == pytest.approx(3 ** (1 / 3) / (math.sqrt(2) * n ** (1 / 3)), rel=0.10)
    # the metrological value also pays for the shortened mean spin
    assert xi2_ideal(n, chi) > xi2_spread(n, chi)


def test_optimal_oat_needs_three_spins():
    with pytest.raises(InputError):
        optimal_oat(2)


def test_coherent_state_is_at_standard_limit():
    for basis in (Basis.FULL, Basis.DICKE):
        assert xi2_metrological(coherent_state(X_AXIS, 5, basis), "x").xi2 == pytest.approx(1.0, abs=1e-10)


def test_tat_beats_oat_for_eight_spins():
    n = 8
    d = 1.0
    t_tat = math.log(2 * n / math.sqrt(3)) / (d * n)
    times = np.linspace(0.5 * t_tat, 1.5 * t_tat, 41)
    psi0 = coherent_state(Z_AXIS, n, Basis.DICKE)
    h = ideal_tat(d, n, "xy")
    best_tat = min(xi2_metrological(evolve(psi0, h, float(t)), "z").xi2 for t in times)
    assert best_tat < optimal_oat(n)[1]


def test_moments_route_matches_state_route():
    psi = oat_state(6, 0.25)
    direct = xi2_metrological(psi, "x")
    from_moments = xi2_from_moments(collective_moments(psi), 6, "x")
    assert from_moments.xi2 == pytest.approx(direct.xi2, rel=1e-12)
    assert set(moment_observables(3, Basis.DICKE)) == {"jx", "jy", "jz", "jxx", "jyy", "jzz", "jxy", "jyz", "jzx"}


def test_vanished_signal_reports_infinity(caplog):
    moments = {"jx": 0.0, "jy": 0.0, "jz": 0.0, "jxx": 1.0, "jyy": 1.0, "jzz": 1.0, "jxy": 0.0, "jyz": 0.0, "jzx": 0.0}
    report = xi2_from_moments(moments, 4, "x")
    assert report.signal_vanished and math.isinf(report.xi2)
    assert "squeezing_signal_vanished" in caplog.text


def test_heuristic_parameter():
    n = 8
    assert xi_heuristic(coherent_state(X_AXIS, n, Basis.DICKE), "z", "x") == pytest.approx(1.0, abs=1e-10)
    chi, _ = optimal_oat(n)
    psi = oat_state(n, chi)
    nu_z, nu_y = nu_optimal(n, chi)
    squeezed = math.sqrt(variance(psi, math.cos(nu_z) * jz(n, Basis.DICKE) + math.sin(nu_z) * jy(n, Basis.DICKE)))
    anti = math.sqrt(variance(psi, math.cos(nu_y) * jz(n, Basis.DICKE) + math.sin(nu_y) * jy(n, Basis.DICKE)))
    mean = expectation(psi, jx(n, Basis.DICKE))
    assert squeezed / math.sqrt(mean / 2) < 1.0
    assert anti / math.sqrt(mean / 2) > 1.0
    with pytest.raises(InputError):
        xi_heuristic(coherent_state(X_AXIS, n, Basis.DICKE), "z", "y")


@pytest.mark.parametrize("n", [4, 6, 8])
def test_noisy_formulas_reduce_to_ideal(n):
    for chi in (0.05, 0.2, 0.45):
        assert xi2_noisy_unprotected(n, chi, 0.0) == pytest.approx(xi2_ideal(n, chi), rel=1e-12)
        assert xi2_noisy_protected(n, chi, 0.0) == pytest.approx(xi2_ideal(n, chi), rel=1e-12)
        assert xi2_noisy_dephasing_exact(n, chi, 0.0) == pytest.approx(xi2_ideal(n, chi), rel=1e-12)


def test_unprotected_reference_value():
    assert xi2_noisy_unprotected(6, 0.2, 0.02) == pytest.approx(0.51116, rel=1e-3)


def test_unprotected_noise_floor():
    n, chi = 6, 0.3
    assert xi2_noisy_unprotected(n, chi, 50.0) == pytest.approx(math.cos(chi) ** (2 - 2 * n), rel=1e-9)


def test_protected_hand_value():
    # N=4, chi=0.05, Gamma t=0.2: bracket 0.156505, numerator 1.117379, cos^6 0.992515
    assert xi2_noisy_protected(4, 0.05, 0.2) == pytest.approx(1.125806, rel=1e-4)
    assert protected_bracket(4, 0.05, 0.2) == pytest.approx(1.117379, rel=1e-4)


def test_protected_formula_is_clamped(monkeypatch, caplog):
    monkeypatch.setattr(squeezing, "protected_bracket", lambda n, chi, gamma_t: -1.0)
    n, chi = 8, 0.3
    value = xi2_noisy_protected(n, chi, 0.1)
    assert value == pytest.approx(squeezing.BRACKET_FLOOR / math.cos(chi) ** (2 * n - 2))
    assert "xi2_formula_clamped" in caplog.text


@pytest.mark.parametrize("n, chi, gamma_t", [(6, 0.2, 0.02), (8, 0.2, 0.05)])
def test_protection_helps_near_the_squeezing_optimum(n, chi, gamma_t):
    assert xi2_noisy_protected(n, chi, gamma_t) < xi2_noisy_unprotected(n, chi, gamma_t)


def test_protected_six_spin_value():
    assert xi2_noisy_protected(6, 0.2, 0.02) == pytest.approx(0.50002, rel=1e-3)


def test_sinh_term_dominates_at_weak_twisting():
    # 2 sinh(Gamma t) / P grows without bound as chi -> 0
    assert xi2_noisy_protected(4, 0.05, 0.2) > xi2_noisy_unprotected(4, 0.05, 0.2)
