import math

import numpy as np
import pytest

from nvhp.errors import PoleError
from nvhp.models.models import BranchEnum, NvConstants, OrientationParams
from nvhp.orientation import (avg_initial_polarization_large_angle, avg_initial_polarization_small_angle,
                              band_fraction, cap_fraction, check_high_field, d_theta, delta_theta,
                              full_nv_hamiltonian, initial_polarization, optical_initial_state,
                              sample_orientations, transition_frequency_minus, validate_secular_approx)


def deg(theta):
    return OrientationParams.from_degrees(theta)


def test_d_theta_limits(constants):
    assert d_theta(deg(0), constants) == pytest.approx(2870.0)
    assert d_theta(deg(90), constants) == pytest.approx(-1405.0)


def test_delta_theta_values(constants):
    assert delta_theta(deg(20), constants) == pytest.approx(44.54, abs=0.05)
    grid = np.linspace(0, 90, 181)
    shifts = [delta_theta(deg(t), constants) for t in grid]
    assert 120 < max(shifts) < 145
    assert 50 <= grid[int(np.argmax(shifts))] <= 62


def test_delta_theta_pole():
    # gamma_e * B equal to D(0)
    with pytest.raises(PoleError):
        delta_theta(deg(0), NvConstants(B=0.1))


def test_full_hamiltonian_is_hermitian(constants):
    h = full_nv_hamiltonian(OrientationParams.from_degrees(35, 40), constants)
    assert np.allclose(h, h.conj().T)


def test_transition_frequency_window(constants):
    f0 = transition_frequency_minus(deg(0), constants)
    f20 = transition_frequency_minus(deg(20), constants)
    assert f0 == pytest.approx(10332 - 2870, abs=0.1)
    assert 500 < f20 - f0 < 600


def test_optical_state_normalized():
    psi = optical_initial_state(OrientationParams.from_degrees(50, 120))
    assert np.vdot(psi, psi).real == pytest.approx(1.0)


def test_initial_polarization():
    assert initial_polarization(0.0) == pytest.approx(1.0)
    assert initial_polarization(math.pi / 2) == pytest.approx(-0.5)
    assert initial_polarization(math.pi / 2, BranchEnum.NEGATIVE) == pytest.approx(1.0)
    assert initial_polarization(0.0, BranchEnum.NEGATIVE) == pytest.approx(-1.0)


def test_cap_average_closed_form():
    c = math.cos(math.radians(20))
    assert avg_initial_polarization_small_angle(math.radians(20)) == pytest.approx(c * (1 + c) / 2, rel=1e-9)
    assert avg_initial_polarization_small_angle(math.radians(20)) == pytest.approx(0.91136, abs=1e-4)


def test_band_average():
    band = (math.radians(70), math.radians(110))
    value = avg_initial_polarization_large_angle(band)
    assert 0.7 < value <= 1.0
    assert avg_initial_polarization_large_angle((math.pi / 2, math.pi / 2)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        avg_initial_polarization_large_angle((0.0, 1.0))


def test_fractions():
    assert cap_fraction(math.radians(20)) == pytest.approx(0.0603, abs=1e-4)
    assert band_fraction(0.0, math.pi) == pytest.approx(1.0)


def test_sample_orientations_uniform():
    theta, phi = sample_orientations(np.random.default_rng(0), 20000)
    assert np.all((theta >= 0) & (theta <= math.pi))
    assert np.mean(np.cos(theta)) == pytest.approx(0.0, abs=0.02)
    assert np.mean(phi) == pytest.approx(math.pi, abs=0.05)


def test_secular_approximation(constants):
    assert validate_secular_approx(deg(0), constants, 0.05, 2001) == pytest.approx(1.0, abs=1e-9)
    at_10 = validate_secular_approx(deg(10), constants, 0.05, 20001)
    assert at_10 > 0.98
    assert validate_secular_approx(deg(45), constants, 0.05, 20001) < at_10


def test_check_high_field():
    assert check_high_field(NvConstants())
    assert not check_high_field(NvConstants(B=0.2))
