"""
Spin operators, states and time-ordered propagation.

Matrices are dense ``numpy`` complex128 arrays. Hermitian generators are
exponentiated through their eigendecomposition (all systems here are at most
2 x 2**6 dimensional). Time is in us and a generator entry of X means an
angular frequency of 2*pi*X rad/us.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from nvhp.errors import DimensionMismatchError, NonHermitianError, NonPhysicalStateError

TWO_PI = 2.0 * np.pi
# segments exponentiated per batched eigh call
_CHUNK = 256


def spin1_operators() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-1 operators in the {|+1>, |0>, |-1>} basis"""
    s = 1.0 / np.sqrt(2.0)
    sx = np.array([[0, s, 0], [s, 0, s], [0, s, 0]], dtype=complex)
    sy = np.array([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return sx, sy, sz


def spin_half_operators() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-1/2 operators in the {|up>, |down>} basis (Iz = diag(1/2, -1/2))"""
    ix = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    iy = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
    iz = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
    return ix, iy, iz


def tensor_product(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, left to right"""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def embed(op: np.ndarray, position: int, dims: Sequence[int]) -> np.ndarray:
    """Place ``op`` on subsystem ``position`` of a register with sub-dimensions ``dims``"""
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[position] = op
    return tensor_product(*factors)


def is_hermitian(m: np.ndarray, rtol: float = 1e-12) -> bool:
    m = np.asarray(m)
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= rtol * scale)


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def check_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    """Raise NonHermitianError or NonPhysicalStateError when ``rho`` is not a valid state"""
    if not is_hermitian(rho, rtol=tol):
        raise NonHermitianError("density matrix is not Hermitian")
    trace = float(np.trace(rho).real)
    if abs(trace - 1.0) > tol:
        raise NonPhysicalStateError(f"density matrix trace {trace} != 1", trace=trace)
    lowest = float(np.linalg.eigvalsh(rho).min())
    if lowest < -tol:
        raise NonPhysicalStateError("density matrix has negative eigenvalues", lowest_eigenvalue=lowest)


@dataclass(frozen=True)
class PiecewiseConstantHamiltonian:
    """
    Ordered generator segments; segment j acts for ``durations[j]`` us.

    ``generators`` has shape (n_segments, dim, dim).
    """

    durations: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        durations = np.asarray(self.durations, dtype=float).reshape(-1)
        generators = np.asarray(self.generators, dtype=complex)
        if generators.ndim == 2:
            generators = generators[None, :, :]
        if generators.ndim != 3 or generators.shape[1] != generators.shape[2]:
            raise DimensionMismatchError("generators must be square matrices of one dimension",
                                         shape=list(generators.shape))
        if len(durations) != len(generators):
            raise DimensionMismatchError("one duration per generator is required",
                                         n_durations=len(durations), n_generators=len(generators))
        if np.any(durations <= 0):
            raise ValueError("segment durations must be positive")
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "generators", generators)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def total_time(self) -> float:
        return float(self.durations.sum())

    @classmethod
    def constant(cls, h: np.ndarray, duration: float) -> "PiecewiseConstantHamiltonian":
        return cls(np.array([duration]), np.asarray(h, dtype=complex)[None, :, :])

    def then(self, other: "PiecewiseConstantHamiltonian") -> "PiecewiseConstantHamiltonian":
        if other.dim != self.dim:
            raise DimensionMismatchError("cannot join schedules of different dimension",
                                         left=self.dim, right=other.dim)
        return PiecewiseConstantHamiltonian(np.concatenate([self.durations, other.durations]),
                                            np.concatenate([self.generators, other.generators]))


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i 2pi H t) for a Hermitian H"""
    energies, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * TWO_PI * energies * t)
    return (vecs * phases) @ vecs.conj().T


def segment_unitaries(h: PiecewiseConstantHamiltonian) -> np.ndarray:
    """Per-segment exponentials, shape (n_segments, dim, dim)"""
    out = np.empty_like(h.generators)
    for start in range(0, len(h.durations), _CHUNK):
        stop = start + _CHUNK
        energies, vecs = np.linalg.eigh(h.generators[start:stop])
        phases = np.exp(-1j * TWO_PI * energies * h.durations[start:stop, None])
        out[start:stop] = np.einsum("nij,nj,nkj->nik", vecs, phases, vecs.conj())
    return out


def evolution_operator(h: PiecewiseConstantHamiltonian) -> np.ndarray:
    """Time-ordered product U = U_n ... U_2 U_1"""
    u = np.eye(h.dim, dtype=complex)
    for start in range(0, len(h.durations), _CHUNK):
        chunk = PiecewiseConstantHamiltonian(h.durations[start:start + _CHUNK],
                                             h.generators[start:start + _CHUNK])
        for step in segment_unitaries(chunk):
            u = step @ u
    return u


def propagate(h: PiecewiseConstantHamiltonian, state: np.ndarray) -> np.ndarray:
    """
    Propagate a density matrix (rho -> U rho U^dagger) or a state vector (psi -> U psi).

    Args:
        h: piecewise-constant Hamiltonian
        state: density matrix (dim x dim) or ket (dim,)

    Returns:
        The propagated state, same shape as ``state``
    """
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != h.dim:
        raise DimensionMismatchError("state and generator dimensions differ",
                                     state_dim=state.shape[0], generator_dim=h.dim)
    u = evolution_operator(h)
    if state.ndim == 1:
        return u @ state
    return u @ state @ u.conj().T


def partial_trace_electron(rho: np.ndarray, electron_dim: int, nuclear_dim: int) -> np.ndarray:
    """Trace out the leading (electron) factor of an electron x nuclear register"""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (electron_dim * nuclear_dim, electron_dim * nuclear_dim):
        raise DimensionMismatchError("dimension does not factor as electron x nuclear",
                                     dim=rho.shape[0], electron_dim=electron_dim, nuclear_dim=nuclear_dim)
    return np.einsum("iaib->ab", rho.reshape(electron_dim, nuclear_dim, electron_dim, nuclear_dim))


def expectation(rho: np.ndarray, op: np.ndarray) -> float:
    """Tr(rho O) for a Hermitian observable; the imaginary rounding residue is dropped"""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape:
        raise DimensionMismatchError("state and observable dimensions differ",
                                     state_dim=rho.shape[0], observable_dim=op.shape[0])
    if not is_hermitian(op):
        raise NonHermitianError("observable is not Hermitian")
    value = np.einsum("ij,ji->", rho, op)
    return float(value.real)
