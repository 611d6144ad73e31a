"""
Double-quantum dressed states and the electron-nuclear flip-flop Hamiltonian.

Two far-detuned single-quantum drives of amplitude Omega couple |+1> and |-1>
through |0>. Eliminating |0> leaves a two-level system in the dressed basis
|+-> = (|-1> +- |+1>)/sqrt(2) with splitting Omega_eff and detuning Delta.
Its eigenstates chi+- mix |+> and |-> with angle zeta; the hyperfine coupling
projected onto them gives the flip-flop element a_x' sin(phi)/2.

Basis conventions used throughout:
  fixed dressed basis   {|+>, |->} x {up, down}
  chi basis             {chi+, chi-} x {up, down}
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import constants

from nvhp.errors import NoResonanceError, RadiusTooSmallError
from nvhp.logging_config import get_logger
from nvhp.models.models import (BranchEnum, DressedParams, HyperfinePair, NvConstants,
                                OrientationParams)
from nvhp.orientation import d_theta as orientation_d_theta
from nvhp.result_writers import ResultTable
from nvhp.spincore import spin_half_operators, tensor_product

logger = get_logger("nvhp")

MIN_RADIUS_NM = 0.15
IX, IY, IZ = spin_half_operators()
# half-Pauli operators on the dressed electron doublet share the spin-1/2 matrices
SIGMA_X, SIGMA_Z = IX, IZ
I2 = np.eye(2, dtype=complex)


def omega_eff(omega_drive: float, d_theta: float) -> float:
    """Double-quantum Rabi frequency 1/2(-|D| + sqrt(8 Omega^2 + D^2))"""
    return 0.5 * (-abs(d_theta) + math.sqrt(8 * omega_drive ** 2 + d_theta ** 2))


@dataclass(frozen=True)
class DressedEigensystem:
    """Exact eigensystem of the driven three-level NV (energies in MHz)"""

    omega_mu_plus: float
    omega_mu_minus: float
    omega_lambda: float
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    lam: np.ndarray
    x_plus: Optional[float]
    x_minus: Optional[float]


def driven_nv_matrix(d_theta: float, omega_drive: float) -> np.ndarray:
    """Driven NV Hamiltonian in the rotating frame, basis {|+1>, |0>, |-1>}"""
    return np.array([
        [d_theta, omega_drive, 0.0],
        [omega_drive, 0.0, omega_drive],
        [0.0, omega_drive, d_theta],
    ], dtype=complex)


def dressed_eigensystem(d_theta: float, omega_drive: float) -> DressedEigensystem:
    root = math.sqrt(8 * omega_drive ** 2 + d_theta ** 2)
    lam = np.array([1.0, 0.0, -1.0], dtype=complex) / math.sqrt(2)
    e_plus = 0.5 * (d_theta + root)
    e_minus = 0.5 * (d_theta - root)

    if omega_drive == 0:
        bright = np.array([1.0, 0.0, 1.0], dtype=complex) / math.sqrt(2)
        zero = np.array([0.0, 1.0, 0.0], dtype=complex)
        # with no drive the bright state sits at D and |0> at zero
        mu_plus, mu_minus = (bright, zero) if d_theta >= 0 else (zero, bright)
        return DressedEigensystem(e_plus, e_minus, d_theta, mu_plus, mu_minus, lam, None, None)

    x_plus = (d_theta + root) / (2 * omega_drive)
    x_minus = (d_theta - root) / (2 * omega_drive)

    def mu(x):
        return np.array([1.0, -x, 1.0], dtype=complex) / math.sqrt(2 + x ** 2)

    # |mu-+> carries X+-
    return DressedEigensystem(e_plus, e_minus, d_theta, mu(x_minus), mu(x_plus), lam, x_plus, x_minus)


@dataclass(frozen=True)
class ChiStates:
    """
    Eigenstates of the dressed electron at detuning Delta, in {|+>, |->}.

    ``energies`` are (E(chi+), E(chi-)); for the positive-D branch chi+ is the
    upper state, for the negative-D branch the lower one.
    """

    chi_plus: np.ndarray
    chi_minus: np.ndarray
    energy: float
    zeta: float
    branch: BranchEnum

    @property
    def energies(self) -> Tuple[float, float]:
        s = 1 if self.branch == BranchEnum.POSITIVE else -1
        return s * self.energy, -s * self.energy

    @property
    def rotation(self) -> np.ndarray:
        """Columns chi+, chi- expressed in the fixed dressed basis"""
        return np.column_stack([self.chi_plus, self.chi_minus])


def electron_hamiltonian(delta: float, omega_eff_value: float,
                         branch: BranchEnum = BranchEnum.POSITIVE) -> np.ndarray:
    """2 Delta sigma_x +- Omega_eff sigma_z in the fixed dressed basis"""
    s = 1 if branch == BranchEnum.POSITIVE else -1
    return 2 * delta * SIGMA_X + s * omega_eff_value * SIGMA_Z


def chi_states(delta: float, omega_eff_value: float,
               branch: BranchEnum = BranchEnum.POSITIVE) -> ChiStates:
    energy = math.sqrt(delta ** 2 + omega_eff_value ** 2 / 4)
    zeta = math.atan2(delta, omega_eff_value / 2)
    c, s = math.cos(zeta / 2), math.sin(zeta / 2)
    if branch == BranchEnum.POSITIVE:
        chi_plus = np.array([c, s], dtype=complex)
        chi_minus = np.array([-s, c], dtype=complex)
    else:
        chi_plus = np.array([c, -s], dtype=complex)
        chi_minus = np.array([s, c], dtype=complex)
    return ChiStates(chi_plus, chi_minus, energy, zeta, branch)


def sin_phi(delta: float, omega_eff_value: float) -> float:
    if delta == 0 and omega_eff_value == 0:
        raise ValueError("sin(phi) is undefined for Delta = Omega_eff = 0")
    return omega_eff_value / math.sqrt(4 * delta ** 2 + omega_eff_value ** 2)


def cos_phi(delta: float, omega_eff_value: float) -> float:
    """Signed companion of sin_phi, 2 Delta / sqrt(4 Delta^2 + Omega_eff^2)"""
    return 2 * delta / math.sqrt(4 * delta ** 2 + omega_eff_value ** 2)


def hartmann_hahn_detunings(gamma_n_B: float, omega_eff_value: float) -> Tuple[float, float]:
    """
    Detunings at which the chi splitting matches the nuclear Larmor frequency.

    Raises:
        NoResonanceError: when gamma_n*B < Omega_eff
    """
    if gamma_n_B < omega_eff_value:
        raise NoResonanceError("Omega_eff exceeds gamma_n*B; the sweep never meets Hartmann-Hahn",
                               gamma_n_B=gamma_n_B, omega_eff=omega_eff_value)
    half = 0.5 * math.sqrt(gamma_n_B ** 2 - omega_eff_value ** 2)
    return -half, half


def dipolar_prefactor(gamma_a: float, gamma_b: float) -> float:
    """(mu0/4pi) hbar gamma_a gamma_b in MHz nm^3 for gyromagnetic ratios in MHz/T"""
    ga = 2 * math.pi * gamma_a * 1e6
    gb = 2 * math.pi * gamma_b * 1e6
    coupling = constants.mu_0 / (4 * math.pi) * constants.hbar * ga * gb  # rad/s m^3
    return coupling / (2 * math.pi * 1e6) / 1e-27


def hyperfine_from_geometry(r_vec: Sequence[float], c: NvConstants) -> HyperfinePair:
    """
    Point-dipole hyperfine pair for a 13C at ``r_vec`` (nm) from the NV, field along z.

    Raises:
        RadiusTooSmallError: |r| <= 0.15 nm (contact regime)
    """
    r_vec = np.asarray(r_vec, dtype=float)
    r = float(np.linalg.norm(r_vec))
    if r <= MIN_RADIUS_NM:
        raise RadiusTooSmallError(f"nuclear spin at {r:.3f} nm is inside the contact regime",
                                  radius_nm=r, min_radius_nm=MIN_RADIUS_NM)
    g = dipolar_prefactor(c.gamma_e, c.gamma_n) / r ** 3
    ex, ey, ez = r_vec / r
    return HyperfinePair(a_x_prime=g * 3 * abs(ez) * math.hypot(ex, ey),
                         a_z_prime=g * (3 * ez ** 2 - 1))


def dressed_params_for(o: OrientationParams, c: NvConstants, omega_drive: float,
                       delta: float = 0.0, branch: Optional[BranchEnum] = None) -> DressedParams:
    """DressedParams for an orientation; the branch follows the sign of D(theta) unless given"""
    d = orientation_d_theta(o, c)
    if omega_drive > 0 and abs(d) / omega_drive < 10:
        logger.warning("Drive is not weak compared with D(theta)",
                       event_type="weak_dressing", d_theta=d, omega_drive=omega_drive)
    if branch is None:
        branch = BranchEnum.POSITIVE if d > 0 else BranchEnum.NEGATIVE
    return DressedParams(omega_drive=omega_drive, omega_eff=omega_eff(omega_drive, d), delta=delta,
                         gamma_n_B=c.gamma_n_B, branch=branch)


def omega_eff_range(theta_lo: float, theta_hi: float, omega_drive: float, c: NvConstants,
                    n: int = 201) -> Tuple[float, float]:
    values = [omega_eff(omega_drive, orientation_d_theta(OrientationParams(theta=t), c))
              for t in np.linspace(theta_lo, theta_hi, n)]
    return min(values), max(values)


def _flip_flop_indices(branch: BranchEnum) -> Tuple[int, int]:
    # chi basis index = 2*electron + nuclear; electron 0=chi+, 1=chi-; nuclear 0=up, 1=down
    if branch == BranchEnum.POSITIVE:
        return 1, 2  # chi+ down <-> chi- up
    return 3, 0  # chi- down <-> chi+ up


def h_trans(dp: DressedParams, hf: HyperfinePair, include_secular: bool = True) -> np.ndarray:
    """
    Flip-flop transfer Hamiltonian in the {chi+, chi-} x {up, down} basis.

    Electron energies +-sqrt(Delta^2 + Omega_eff^2/4) (order reversed for the
    negative-D branch), nuclear Zeeman gamma_n*B I_z, the secular term
    2 a_z' cos(phi) sigma_z~ I_z and the resonant flip-flop element
    a_x' sin(phi)/2 between the Hartmann-Hahn pair of the branch.
    """
    chi = chi_states(dp.delta, dp.omega_eff, dp.branch)
    e_plus, e_minus = chi.energies
    # projections of 2 sigma_x onto the chi states
    sx_plus = 2 * float(np.real(chi.chi_plus.conj() @ SIGMA_X @ chi.chi_plus))
    sx_cross = 2 * float(np.real(chi.chi_minus.conj() @ SIGMA_X @ chi.chi_plus))

    electron = np.diag([e_plus, e_minus]).astype(complex)
    h = tensor_product(electron, I2) + dp.gamma_n_B * tensor_product(I2, IZ)
    if include_secular:
        h = h + 2 * hf.a_z_prime * sx_plus * tensor_product(SIGMA_Z, IZ)

    i, j = _flip_flop_indices(dp.branch)
    coupling = hf.a_x_prime * abs(sx_cross) / 2
    h[i, j] += coupling
    h[j, i] += coupling
    return h


def transfer_hamiltonian_fixed(dp: DressedParams, hf: HyperfinePair, include_secular: bool = True) -> np.ndarray:
    """h_trans rotated from the chi basis into the fixed dressed basis"""
    rot = tensor_product(chi_states(dp.delta, dp.omega_eff, dp.branch).rotation, I2)
    return rot @ h_trans(dp, hf, include_secular) @ rot.conj().T


def h_lab(dp: DressedParams, hf: HyperfinePair, include_secular: bool = True) -> np.ndarray:
    """
    Dressed electron plus full hyperfine coupling in the fixed dressed basis:
    2 Delta sigma_x +- Omega_eff sigma_z + 2 sigma_x (a_x' I_x + a_z' I_z) + gamma_n*B I_z
    """
    a_z = hf.a_z_prime if include_secular else 0.0
    return (tensor_product(electron_hamiltonian(dp.delta, dp.omega_eff, dp.branch), I2)
            + 2 * tensor_product(SIGMA_X, hf.a_x_prime * IX + a_z * IZ)
            + dp.gamma_n_B * tensor_product(I2, IZ))


def h_matrix_large_angle(dp: DressedParams, hf: HyperfinePair) -> np.ndarray:
    """Negative-D flip-flop block in the {chi- down, chi+ up} subspace"""
    if dp.branch != BranchEnum.NEGATIVE:
        raise ValueError("the large-angle block is defined for the negative-D branch")
    w = math.sqrt(dp.delta ** 2 + dp.omega_eff ** 2 / 4)
    coupling = hf.a_x_prime * sin_phi(dp.delta, dp.omega_eff) / 2
    return np.array([
        [w - dp.gamma_n_B / 2, coupling],
        [coupling, -w + dp.gamma_n_B / 2],
    ], dtype=complex)


def level_diagram(deltas: Sequence[float], dp: DressedParams, hf: HyperfinePair,
                  include_secular: bool = True) -> ResultTable:
    """Sorted eigenvalues of h_trans along a monotone Delta grid"""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.size > 1 and not (np.all(np.diff(deltas) > 0) or np.all(np.diff(deltas) < 0)):
        raise ValueError("Delta grid must be monotone")
    energies = np.array([
        np.linalg.eigvalsh(h_trans(dp.model_copy(update={"delta": float(d)}), hf, include_secular))
        for d in deltas
    ])
    columns = {"delta_mhz": deltas}
    for k in range(4):
        columns[f"e{k + 1}"] = energies[:, k]
    return ResultTable.from_columns("levels", columns, summary={
        "min_gap_mhz": float(np.min(energies[:, 2] - energies[:, 1])),
        "delta_at_min_gap_mhz": float(deltas[np.argmin(energies[:, 2] - energies[:, 1])]),
    })
