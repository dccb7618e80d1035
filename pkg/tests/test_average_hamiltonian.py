from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from src.core.errors import InputError
from src.models.hamiltonians import h_heisenberg, h_ising, zeeman
from src.sequences.average_hamiltonian import (
    alpha_tilde,
    cycle_propagator,
    effective_field,
    effective_field_vector,
    field_angle,
    magnus,
    magnus_terms,
    moment_t6,
    propagate_sequence,
    toggling_frames,
)
from src.sequences.pulses import Delay, PulseSequence, pulse
from src.sequences.templates import mrev8_with_echo
from src.spins.evolution import evolve
from src.spins.operators import X_AXIS, Basis, coherent_state, jx, jy, jz


def x_echo(tau: float) -> PulseSequence:
    return PulseSequence((Delay(tau), pulse("x", math.pi), Delay(2 * tau), pulse("x", math.pi), Delay(tau)), name="echo")


def test_single_frame_is_its_own_average(slab4):
    h = h_ising(slab4)
    seq = PulseSequence((Delay(2.0),))
    h1, h2, h3 = magnus_terms(toggling_frames(seq, h))
    assert np.allclose(h1.data, h.data)
    assert np.allclose(h2.data, 0.0)
    assert np.allclose(h3.data, 0.0)


def test_echo_removes_the_field_but_keeps_the_ising_term(slab4):
    h_int = h_ising(slab4) + zeeman(4, omega=0.3)
    h1 = magnus(toggling_frames(x_echo(0.5), h_int), 1)
    assert np.allclose(h1.data, h_ising(slab4).data, atol=1e-12)
    assert np.allclose(effective_field_vector(x_echo(0.5)), 0.0, atol=1e-15)


def test_toggled_frames_follow_the_accumulated_rotation():
    # pi/2 about x takes the toggled J_z to J_y
    seq = PulseSequence((Delay(1.0), pulse("x"), Delay(1.0), pulse("-x")), name="quarter")
    frame = toggling_frames(seq, jz(3))
    assert np.allclose(frame.segments[0][0].data, jz(3).data)
    assert np.allclose(frame.segments[1][0].data, jy(3).data, atol=1e-12)
    assert np.allclose(effective_field_vector(seq), [0.0, 0.5, 0.5], atol=1e-12)
    assert field_angle(effective_field_vector(seq)) == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("basis", [Basis.FULL, Basis.DICKE])
def test_effective_field_operator_matches_its_vector(basis):
    seq = PulseSequence((Delay(1.0), pulse("x"), Delay(1.0), pulse("-x")), name="quarter")
    field = effective_field(seq, 3, basis)
    assert field.basis is basis
    assert np.allclose(field.data, 0.5 * jy(3, basis).data + 0.5 * jz(3, basis).data, atol=1e-12)


def test_non_cyclic_sequence_is_rejected():
    seq = PulseSequence((Delay(1.0), pulse("x")))
    with pytest.raises(InputError, match="not cyclic"):
        toggling_frames(seq, jz(2))
    frame = toggling_frames(seq, jz(2), require_cyclic=False)
    assert frame.cycle_time == pytest.approx(1.0)


def test_magnus_order_validation(slab4):
    frame = toggling_frames(x_echo(1.0), h_ising(slab4))
    with pytest.raises(InputError):
        magnus_terms(frame, 4)


def lopsided(tau: float) -> PulseSequence:
    # unequal end windows keep the even Magnus orders alive
    return PulseSequence((Delay(tau), pulse("x"), Delay(2 * tau), pulse("-x"), Delay(0.5 * tau)), name="lopsided")


def _magnus_error(tau: float, h) -> float:
    seq = lopsided(tau)
    total = sum(magnus_terms(toggling_frames(seq, h)), start=0 * h)
    approx = expm(-1j * seq.cycle_time * total.data)
    return float(np.linalg.norm(approx - cycle_propagator(seq, h).data))


def test_third_order_expansion_converges_at_fourth_order(slab4):
    h = h_heisenberg(slab4) + 0.7 * h_ising(slab4)
    tau = 0.2 / (3.5 * np.linalg.norm(h.data, 2))
    coarse, fine = _magnus_error(tau, h), _magnus_error(tau / 2, h)
    assert fine < coarse
    assert 12.0 < coarse / fine < 20.0


def test_propagation_matches_direct_evolution_without_pulses(slab4):
    h = h_ising(slab4)
    seq = PulseSequence((Delay(0.4), Delay(0.6)))
    psi = coherent_state(X_AXIS, 4)
    final, recorded = propagate_sequence(seq, h, psi, n_cycles=3)
    assert len(recorded) == 3
    expected = evolve(psi, h, 3.0)
    assert abs(final.overlap(expected)) == pytest.approx(1.0, abs=1e-10)


def test_moment_t6():
    assert moment_t6(jx(3)) == pytest.approx(0.0, abs=1e-14)
    assert moment_t6(jz(3)) == pytest.approx(1.0)
    assert moment_t6(0.5 * jz(4, Basis.DICKE)) == pytest.approx(0.25)
    with pytest.raises(InputError):
        moment_t6(1j * jz(3))


def test_residual_dephasing_scales_as_tau_to_the_fourth(slab4):
    h = h_ising(slab4)
    moments = []
    for tau in (0.5, 1.0):
        seq = mrev8_with_echo(tau, tau * 1.1, tau * 0.9, "2a")
        moments.append(moment_t6(magnus(toggling_frames(seq, h), 3)))
    assert moments[0] > 0.0
    assert moments[1] / moments[0] == pytest.approx(16.0, rel=1e-6)
    assert alpha_tilde(moments[1], 2.0) == pytest.approx(moments[1] / 64.0)
    with pytest.raises(InputError):
        alpha_tilde(1.0, 0.0)
