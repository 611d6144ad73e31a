import numpy as np
import pytest
from scipy.linalg import expm

from nvhp.errors import DimensionMismatchError, NonHermitianError, NonPhysicalStateError
from nvhp.spincore import (TWO_PI, PiecewiseConstantHamiltonian, check_density_matrix, embed,
                           evolution_operator, expectation, expm_hermitian, is_hermitian, ket_to_dm,
                           partial_trace_electron, propagate, segment_unitaries, spin1_operators,
                           spin_half_operators, tensor_product)

IX, IY, IZ = spin_half_operators()


def test_spin_algebra():
    sx, sy, sz = spin1_operators()
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz)
    assert np.allclose(IX @ IY - IY @ IX, 1j * IZ)
    assert np.allclose(sx @ sx + sy @ sy + sz @ sz, 2 * np.eye(3))


def test_embed_places_operator():
    op = embed(IZ, 1, [2, 2, 2])
    assert op.shape == (8, 8)
    assert np.allclose(op, tensor_product(np.eye(2), IZ, np.eye(2)))


def test_expm_hermitian_matches_scipy():
    h = 1.3 * IX + 0.4 * IZ
    assert np.allclose(expm_hermitian(h, 0.7), expm(-1j * TWO_PI * h * 0.7))


def test_full_rabi_flip():
    # H = a I_x flips |up> to |down> after t = 1/(2a)
    h = PiecewiseConstantHamiltonian.constant(1.0 * IX, 0.5)
    psi = propagate(h, np.array([1.0, 0.0], dtype=complex))
    assert abs(psi[1]) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_time_ordering():
    h1, h2 = 0.8 * IX, 0.5 * IZ + 0.3 * IY
    h = PiecewiseConstantHamiltonian.constant(h1, 0.3).then(PiecewiseConstantHamiltonian.constant(h2, 0.2))
    expected = expm(-1j * TWO_PI * h2 * 0.2) @ expm(-1j * TWO_PI * h1 * 0.3)
    assert np.allclose(evolution_operator(h), expected)


def test_ket_and_density_matrix_agree():
    rng = np.random.default_rng(3)
    generators = rng.normal(size=(600, 4, 4)) + 1j * rng.normal(size=(600, 4, 4))
    generators = generators + generators.conj().transpose(0, 2, 1)
    h = PiecewiseConstantHamiltonian(np.full(600, 1e-3), generators)
    psi0 = np.array([1, 1j, 0, 1], dtype=complex) / np.sqrt(3)
    psi = propagate(h, psi0)
    rho = propagate(h, ket_to_dm(psi0))
    assert np.allclose(rho, ket_to_dm(psi))
    assert np.trace(rho).real == pytest.approx(1.0)
    check_density_matrix(rho)


def test_partial_trace_of_product():
    rho_e = np.diag([0.25, 0.75]).astype(complex)
    rho_n = np.array([[0.6, 0.1], [0.1, 0.4]], dtype=complex)
    assert np.allclose(partial_trace_electron(np.kron(rho_e, rho_n), 2, 2), rho_n)


def test_expectation():
    rho = ket_to_dm(np.array([1.0, 0.0]))
    assert expectation(rho, IZ) == pytest.approx(0.5)
    with pytest.raises(NonHermitianError):
        expectation(rho, np.array([[0, 1], [0, 0]], dtype=complex))


def test_dimension_errors():
    with pytest.raises(DimensionMismatchError):
        PiecewiseConstantHamiltonian(np.array([0.1, 0.2]), np.stack([IX]))
    with pytest.raises(DimensionMismatchError):
        propagate(PiecewiseConstantHamiltonian.constant(IX, 1.0), np.ones(4))
    with pytest.raises(DimensionMismatchError):
        partial_trace_electron(np.eye(6) / 6, 2, 2)


def test_invalid_density_matrix():
    with pytest.raises(NonPhysicalStateError):
        check_density_matrix(np.eye(2, dtype=complex))
    with pytest.raises(NonPhysicalStateError):
        check_density_matrix(np.diag([1.2, -0.2]).astype(complex))
    with pytest.raises(NonHermitianError):
        check_density_matrix(np.array([[0.5, 0.2], [0.0, 0.5]], dtype=complex))


def test_segment_unitaries_are_per_step_exponentials():
    generators = np.array([0.8 * IX, 0.3 * IZ, IX + IZ])
    durations = np.array([0.1, 0.25, 0.05])
    steps = segment_unitaries(PiecewiseConstantHamiltonian(durations, generators))
    assert steps.shape == (3, 2, 2)
    for step, h, dt in zip(steps, generators, durations):
        assert np.allclose(step, expm(-1j * TWO_PI * h * dt))


def test_is_hermitian():
    assert is_hermitian(IX + IZ)
    assert not is_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
