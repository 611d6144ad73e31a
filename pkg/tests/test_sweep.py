import math

import numpy as np
import pytest

from nvhp.errors import DimensionMismatchError, NoResonanceError, SpanTooSmallError
from nvhp.models.models import AdiabaticityEnum, DressedParams, HyperfinePair, OrientationParams, SweepSchedule
from nvhp.orientation import transition_frequency_minus
from nvhp.spincore import PiecewiseConstantHamiltonian, evolution_operator
from nvhp.sweep import (SweepPropagator, adiabaticity_band, adiabaticity_margin_far, brownian_time,
                        crossing_overlap, default_time_step, drive_envelope, electron_diabatic_probability,
                        expected_rotations_between_windows, ise_schedule, ise_single_sweep, ise_transfer,
                        lz_mu, lz_result, lz_surface, nuclear_phase_kick, rotation_adiabaticity,
                        rotation_following_fidelity, spans_resonances, split_at_crossing, split_propagators,
                        state_prep_sweep, sweeps_per_window, up_counts)

from conftest import GAMMA_N_B


########################################### closed forms

def test_p_max_reference_values():
    assert lz_result(lz_mu(3.0, 0.6, 6.0, 4.0)).p_max == pytest.approx(0.6922, abs=1e-3)
    assert lz_result(lz_mu(3.0, 0.6, 6.0, 3.8538)).p_max == pytest.approx(0.7472, abs=3e-3)


def test_p_max_at_default_field():
    # 0.36 T; the 0.70 quoted for a 4 MHz nuclear Zeeman splitting is not reached here
    assert GAMMA_N_B == pytest.approx(3.8538)
    assert lz_result(lz_mu(3.0, 0.6, 6.0, GAMMA_N_B)).p_max == pytest.approx(0.747, abs=3e-3)


def test_lz_result_relations():
    res = lz_result(0.05)
    assert res.p_lz == pytest.approx(math.exp(-2 * math.pi * 0.05))
    assert res.p_max == pytest.approx(4 * res.p_lz * (1 - res.p_lz))
    assert res.p_avg == pytest.approx(res.p_max / 2)
    assert lz_result(0.0).p_max == 0.0
    assert lz_result(math.inf).p_max == 0.0


def test_p_max_peaks_at_half_crossing():
    # P_max = 1 exactly when P_LZ = 1/2
    mu = math.log(2) / (2 * math.pi)
    assert lz_result(mu).p_max == pytest.approx(1.0)


def test_lz_mu_requires_resonance():
    with pytest.raises(NoResonanceError):
        lz_mu(4.0, 0.6, 6.0, 4.0)
    with pytest.raises(ValueError):
        lz_mu(3.0, 0.6, 0.0, 4.0)


def test_lz_mu_scaling():
    base = lz_mu(3.0, 0.5, 6.0, GAMMA_N_B)
    assert lz_mu(3.0, 1.0, 6.0, GAMMA_N_B) == pytest.approx(4 * base)
    assert lz_mu(3.0, 0.5, 3.0, GAMMA_N_B) == pytest.approx(2 * base)


def test_lz_surface_layout():
    table = lz_surface(3.6, GAMMA_N_B, np.linspace(0, 1, 11), [1.0, 6.0])
    assert table.name == "pmax_surface"
    assert len(table.frame) == 22
    assert table.frame["p_max"].between(0, 1).all()
    assert table.frame.loc[table.frame["a_x_mhz"] == 0, "p_max"].eq(0).all()


def test_crossing_overlap():
    assert crossing_overlap(3.0, 6.0, GAMMA_N_B) == pytest.approx(0.721, abs=2e-3)
    assert crossing_overlap(1.0, 0.5, GAMMA_N_B) == pytest.approx(0.109, abs=2e-3)
    assert crossing_overlap(1.0, -0.5, GAMMA_N_B) == crossing_overlap(1.0, 0.5, GAMMA_N_B)


def test_adiabaticity_margin():
    assert adiabaticity_margin_far(3.0, 6.0) == pytest.approx(2 * math.pi * 1.5)
    assert adiabaticity_band(10.0) == AdiabaticityEnum.PASS
    assert adiabaticity_band(2.0) == AdiabaticityEnum.BORDERLINE
    assert adiabaticity_band(0.5) == AdiabaticityEnum.FAIL


def test_electron_diabatic_probability():
    assert electron_diabatic_probability(3.0, 6.0) == pytest.approx(6.1e-4, rel=0.01)
    assert electron_diabatic_probability(3.0, 1.0) < 1e-18


def test_default_time_step(dressed):
    assert default_time_step(dressed, HyperfinePair(a_x_prime=0.0)) == 1e-3
    assert default_time_step(dressed, HyperfinePair(a_x_prime=20.0)) < 1e-3


########################################### schedules

def test_schedule_is_symmetric(dressed):
    s = ise_schedule(dressed, 6.0, 10.0)
    assert s.delta_start == pytest.approx(-30.0)
    assert s.delta_end == pytest.approx(30.0)
    assert spans_resonances(s, dressed)
    assert not spans_resonances(ise_schedule(dressed, 0.1, 10.0), dressed)


def test_segments_cover_duration(dressed):
    s = ise_schedule(dressed, 6.0, 1.0, time_step=0.003)
    durations, deltas = s.segments()
    assert sum(durations) == pytest.approx(1.0)
    assert len(deltas) == s.n_steps
    assert deltas[0] > s.delta_start and deltas[-1] < s.delta_end


@pytest.mark.parametrize("delta_start,rate_v,expected", [(-3.0, 2.0, 4), (3.0, -2.0, 4), (1.0, 1.0, 0)])
def test_split_at_crossing(delta_start, rate_v, expected):
    s = SweepSchedule(delta_start=delta_start, rate_v=rate_v, duration=4.0 if expected else 2.0, time_step=0.4)
    split = split_at_crossing(s)
    assert split == expected
    if split:
        _, deltas = s.segments()
        assert all(np.sign(d) == np.sign(delta_start) for d in deltas[:split])
        assert all(np.sign(d) != np.sign(delta_start) for d in deltas[split:])


def test_split_propagators_compose():
    rng = np.random.default_rng(4)
    raw = rng.normal(size=(6, 3, 3)) + 1j * rng.normal(size=(6, 3, 3))
    h = PiecewiseConstantHamiltonian(np.full(6, 0.2), raw + raw.conj().transpose(0, 2, 1))
    for split in (0, 2, 6):
        before, after = split_propagators(h, split)
        assert np.allclose(after @ before, evolution_operator(h))


def test_nuclear_phase_kick():
    assert list(up_counts(2)) == [2, 1, 1, 0]
    kick = nuclear_phase_kick(2, 0.5)
    assert kick.shape == (8,)
    assert np.allclose(kick[:4], kick[4:])
    assert np.allclose(kick[:4], np.exp(0.5j * np.array([2, 1, 1, 0])))
    assert np.allclose(nuclear_phase_kick(1, 0.0), 1.0)


########################################### numeric sweeps

def test_chi_unitary_is_unitary(dressed, hyperfine):
    prop = SweepPropagator(dressed, hyperfine, ise_schedule(dressed, 6.0, 10.0, time_step=2e-3))
    for phase in (0.0, 1.0):
        u = prop.chi_unitary(phase)
        assert np.allclose(u @ u.conj().T, np.eye(4), atol=1e-9)


def test_no_coupling_no_transfer(dressed):
    result = ise_transfer(dressed, HyperfinePair(a_x_prime=0.0), ise_schedule(dressed, 6.0, 10.0, time_step=2e-3),
                          n_phases=4)
    assert result["raw"] == pytest.approx(0.0, abs=1e-10)
    assert result["leakage"] < 2e-3


def test_transfer_is_bounded_by_p_max(dressed, hyperfine):
    result = ise_transfer(dressed, hyperfine, ise_schedule(dressed, 6.0, 10.0, time_step=2e-3), n_phases=8)
    p_max = lz_result(lz_mu(3.0, 0.6, 6.0, GAMMA_N_B)).p_max
    assert result["raw"] <= p_max + 0.03
    assert 0.2 < result["phase_averaged"] < 0.55
    assert result["leakage"] < 0.01


def test_phase_reshuffles_transfer_but_not_polarized_state(dressed, hyperfine):
    prop = SweepPropagator(dressed, hyperfine, ise_schedule(dressed, 6.0, 10.0, time_step=2e-3))
    phases = (0.0, 1.0, 2.5)
    # chi- down is outside the resonant pair of the positive branch
    kept = [abs(prop.chi_unitary(phase)[3, 3]) ** 2 for phase in phases]
    moved = [abs(prop.chi_unitary(phase)[1, 2]) ** 2 for phase in phases]
    assert min(kept) > 0.998
    assert max(kept) - min(kept) < 1e-3
    assert max(moved) - min(moved) > 0.1


@pytest.mark.parametrize("mu", [0.01, 0.05, 0.2, 0.5])
def test_isolated_crossings_follow_closed_form(mu):
    dp = DressedParams(omega_eff=1.0, gamma_n_B=GAMMA_N_B)
    assert crossing_overlap(1.0, 0.5, GAMMA_N_B) < 0.12
    hf = HyperfinePair(a_x_prime=math.sqrt(mu / lz_mu(1.0, 1.0, 0.5, GAMMA_N_B)))
    result = ise_transfer(dp, hf, ise_schedule(dp, 0.5, 40.0, time_step=2e-3), n_phases=16,
                          include_secular=False)
    assert result["phase_averaged"] == pytest.approx(lz_result(mu).p_avg, rel=0.1)


def test_single_sweep_preserves_trace(dressed, hyperfine):
    rho = np.diag([0.0, 0.0, 1.0, 0.0]).astype(complex)
    out = ise_single_sweep(rho, dressed, hyperfine, ise_schedule(dressed, 6.0, 10.0, time_step=2e-3))
    assert np.trace(out).real == pytest.approx(1.0)
    assert np.allclose(out, out.conj().T)
    with pytest.raises(DimensionMismatchError):
        ise_single_sweep(np.eye(2) / 2, dressed, hyperfine, ise_schedule(dressed, 6.0, 10.0))


########################################### state preparation

@pytest.mark.parametrize("theta_deg", [0.0, 10.0, 20.0])
def test_state_prep_window(constants, theta_deg):
    fidelity = state_prep_sweep(math.radians(theta_deg), constants, 20.0, 870 / 0.4, 870.0)
    assert fidelity > 0.99


def test_drive_envelope():
    envelope = drive_envelope(10, 0.2)
    assert envelope[0] == pytest.approx(math.sin(math.pi / 8) ** 2)
    assert np.allclose(envelope, envelope[::-1])
    assert np.allclose(envelope[2:8], 1.0)
    assert np.allclose(drive_envelope(5, 0.0), 1.0)
    with pytest.raises(ValueError):
        drive_envelope(10, 0.5)


def test_abrupt_drive_loses_population(constants):
    theta = math.radians(10.0)
    ramped = state_prep_sweep(theta, constants, 20.0, 870 / 0.4, 870.0)
    abrupt = state_prep_sweep(theta, constants, 20.0, 870 / 0.4, 870.0, ramp_fraction=0.0)
    assert abrupt < ramped


def test_state_prep_centred_orientation(constants):
    theta = math.radians(12.0)
    center = transition_frequency_minus(OrientationParams(theta=theta), constants)
    assert state_prep_sweep(theta, constants, 20.0, 870 / 0.4, 870.0, center=center) > 0.99


def test_state_prep_too_fast(constants):
    assert state_prep_sweep(math.radians(10.0), constants, 20.0, 870 / 0.004, 870.0) < 0.9


def test_state_prep_span_too_small(constants):
    with pytest.raises(SpanTooSmallError):
        state_prep_sweep(math.radians(10.0), constants, 20.0, 1000.0, 100.0)


########################################### rotation and Brownian motion

def test_rotation_margin():
    assert rotation_adiabaticity(4.0, math.pi, 0.78) == pytest.approx(12.48, abs=0.01)
    assert rotation_adiabaticity(4.0, math.pi, 0.078) == pytest.approx(1.248, abs=0.001)


def test_rotation_following():
    assert rotation_following_fidelity(4.0, math.pi, 7.8) > 0.99
    assert rotation_following_fidelity(4.0, math.pi, 1e-3) < 0.05


def test_brownian_time():
    assert brownian_time(30.0, 1e-3, 293.0) == pytest.approx(10.48, rel=0.01)
    assert brownian_time(60.0, 1e-3, 293.0) == pytest.approx(8 * brownian_time(30.0, 1e-3, 293.0))
    with pytest.raises(ValueError):
        brownian_time(-1.0, 1e-3, 293.0)


def test_window_bookkeeping():
    assert sweeps_per_window(205.0, 10.0) == 20
    assert sweeps_per_window(9.0, 10.0) == 0
    assert expected_rotations_between_windows(math.radians(20)) == pytest.approx(16.6, abs=0.05)
