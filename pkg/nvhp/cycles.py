"""
Iterated polarization cycles.

One cycle is: reset the electron into a fresh dressed state, run one ISE
sweep, trace the electron out. The nuclear density matrix carries over
between cycles; electron-nuclear coherence does not.

Polarization values in a ``PolarizationSeries`` are oriented along the
protocol's target, so buildup is positive for both branches: the small-angle
(positive-D) protocol pumps nuclei into |down>, the large-angle one into |up>.
"""

import itertools
import math
from typing import List, Optional, Sequence

import numpy as np

from nvhp.dressed import SIGMA_X, chi_states, dipolar_prefactor, electron_hamiltonian
from nvhp.errors import DimensionMismatchError, SystemTooLargeError
from nvhp.logging_config import get_logger
from nvhp.models.models import (BranchEnum, CycleConfig, DressedParams, ElectronResetEnum,
                                NuclearSpinRecord, PolarizationSeries, SweepSchedule)
from nvhp.spincore import (PiecewiseConstantHamiltonian, check_density_matrix, embed,
                           partial_trace_electron, spin_half_operators, tensor_product)
from nvhp.sweep import (SweepPropagator, nuclear_phase_kick, phase_grid, spans_resonances, split_at_crossing,
                        split_propagators, up_counts)

logger = get_logger("nvhp")

MAX_SPINS = 6
# trace and eigenvalue slack accepted after many cycles
STATE_TOL = 1e-8
IX, IY, IZ = spin_half_operators()
I2 = np.eye(2, dtype=complex)


def _n_spins(dim: int) -> int:
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 1 or 2 ** n != dim:
        raise DimensionMismatchError("nuclear register dimension must be a power of two", dim=dim)
    return n


def spin_polarizations(rho_n: np.ndarray) -> List[float]:
    """Tr(rho I_z^i)/(1/2) for every spin of the register, |up> = +1"""
    rho_n = np.asarray(rho_n, dtype=complex)
    n = _n_spins(rho_n.shape[0])
    dims = [2] * n
    return [2 * float(np.real(np.einsum("ij,ji->", rho_n, embed(IZ, i, dims)))) for i in range(n)]


def polarization_metric(rho_n: np.ndarray) -> float:
    """Mean Tr(rho I_z^i)/(1/2) over the spins of a nuclear-only density matrix"""
    return float(np.mean(spin_polarizations(rho_n)))


def target_sign(branch: BranchEnum) -> int:
    """+1 when the protocol pumps towards |up>, -1 towards |down>"""
    return -1 if branch == BranchEnum.POSITIVE else 1


def electron_reset_state(reset: ElectronResetEnum, init_polarization: float = 1.0) -> np.ndarray:
    """Electron state after re-initialization, chi basis {chi+, chi-}"""
    mixed = np.eye(2, dtype=complex) / 2
    if reset == ElectronResetEnum.UNPOLARIZED:
        return mixed
    pure = np.diag([1.0, 0.0] if reset == ElectronResetEnum.CHI_PLUS else [0.0, 1.0]).astype(complex)
    return init_polarization * pure + (1 - init_polarization) * mixed


def polarized_nuclear_state(n_spins: int, branch: BranchEnum) -> np.ndarray:
    """Product state with every spin along the protocol target"""
    ket = np.zeros(2 ** n_spins, dtype=complex)
    ket[0 if target_sign(branch) > 0 else -1] = 1.0
    return np.outer(ket, ket.conj())


def dephase_magnetization(rho_n: np.ndarray) -> np.ndarray:
    """Zero the coherences between nuclear states of different total I_z'"""
    rho_n = np.asarray(rho_n, dtype=complex)
    ups = up_counts(_n_spins(rho_n.shape[0]))
    return np.where(ups[:, None] == ups[None, :], rho_n, 0.0)


class CycleMap:
    """
    Nuclear channel of one cycle, averaged over a set of sweep unitaries.

    ``unitaries`` act on electron x nuclear with the electron state given in
    the same basis as ``rho_e``. With ``dephase`` the incoming nuclear state
    loses its coherence between sectors of different total I_z' first, as
    for a sweep started at a random nuclear Larmor phase.
    """

    def __init__(self, unitaries: Sequence[np.ndarray], rho_e: np.ndarray, damping: float = 1.0,
                 dephase: bool = False):
        self.unitaries = [np.asarray(u, dtype=complex) for u in unitaries]
        self.rho_e = np.asarray(rho_e, dtype=complex)
        self.nuclear_dim = self.unitaries[0].shape[0] // 2
        self.damping = damping
        self.dephase = dephase

    def __call__(self, rho_n: np.ndarray) -> np.ndarray:
        if self.dephase:
            rho_n = dephase_magnetization(rho_n)
        joint = np.kron(self.rho_e, rho_n)
        out = np.zeros_like(rho_n, dtype=complex)
        for u in self.unitaries:
            out += partial_trace_electron(u @ joint @ u.conj().T, 2, self.nuclear_dim)
        out /= len(self.unitaries)
        if self.damping < 1.0:
            # transfer suppressed by the electron rotating-frame decay over one sweep
            out = self.damping * out + (1 - self.damping) * rho_n
        return 0.5 * (out + out.conj().T)


def _damping(cfg: CycleConfig) -> float:
    return math.exp(-cfg.schedule.duration / cfg.t1rho) if cfg.t1rho else 1.0


def _phases(cfg: CycleConfig) -> np.ndarray:
    """Nuclear phases picked up between the two crossings, offset by the Stokes phase"""
    return phase_grid(cfg.n_phases) + cfg.stokes_phase if cfg.n_phases else np.array([cfg.stokes_phase])


def iterate(cycle_map: CycleMap, rho_n: np.ndarray, n_cycles: int, sign: int) -> PolarizationSeries:
    """
    Apply ``cycle_map`` ``n_cycles`` times; values are oriented by ``sign``.

    Raises:
        NonPhysicalStateError: a cycle leaves a state with the wrong trace or a negative eigenvalue
    """
    check_density_matrix(rho_n, STATE_TOL)
    values = [sign * polarization_metric(rho_n)]
    per_spin = [[sign * p] for p in spin_polarizations(rho_n)]
    for _ in range(n_cycles):
        rho_n = cycle_map(rho_n)
        check_density_matrix(rho_n, STATE_TOL)
        values.append(sign * polarization_metric(rho_n))
        for series, p in zip(per_spin, spin_polarizations(rho_n)):
            series.append(sign * p)
    return PolarizationSeries(values=values, per_spin=per_spin if len(per_spin) > 1 else None)


########################################### One nucleus

def single_spin_map(cfg: CycleConfig, hf) -> CycleMap:
    prop = SweepPropagator(cfg.dp, hf, cfg.schedule, cfg.model, cfg.include_secular)
    rho_e = electron_reset_state(cfg.electron_reset_state, cfg.init_polarization)
    return CycleMap([prop.chi_unitary(p) for p in _phases(cfg)], rho_e, _damping(cfg), cfg.larmor_dephasing)


def run_cycles_single(cfg: CycleConfig, hf) -> PolarizationSeries:
    """
    Buildup of one nuclear spin from the maximally mixed state.

    rho_{k+1} = tr_e[U (rho_e (x) rho_k) U^dagger], with rho_e the configured
    reset state and U the sweep propagator (averaged over ``cfg.n_phases``
    Stokes phases when enabled). With ``cfg.larmor_dephasing`` the nuclear
    coherence is dropped before each cycle, which makes the buildup monotone.
    """
    series = iterate(single_spin_map(cfg, hf), np.eye(2, dtype=complex) / 2, cfg.n_cycles,
                     target_sign(cfg.dp.branch))
    logger.debug("Cycle run finished", event_type="cycles_done", n_cycles=cfg.n_cycles,
                 final_polarization=series.values[-1])
    return series


def run_depolarization(cfg: CycleConfig, hf) -> PolarizationSeries:
    """
    Same map started from a fully polarized nucleus.

    With an unpolarized electron reset both flip-flop directions are equally
    likely and |P| relaxes towards zero.
    """
    if cfg.electron_reset_state != ElectronResetEnum.UNPOLARIZED:
        logger.warning("Depolarization run with a polarized electron reset",
                       event_type="depolarization_reset", reset=cfg.electron_reset_state.value)
    return iterate(single_spin_map(cfg, hf), polarized_nuclear_state(1, cfg.dp.branch), cfg.n_cycles,
                   target_sign(cfg.dp.branch))


########################################### Several nuclei

def chain_positions(n_spins: int, coupling_khz: float, gamma_n: float) -> Optional[np.ndarray]:
    """Equally spaced chain along x with nearest-neighbour dipolar coupling ``coupling_khz``"""
    if coupling_khz <= 0:
        return None
    spacing = (dipolar_prefactor(gamma_n, gamma_n) / (coupling_khz * 1e-3)) ** (1 / 3)
    return np.column_stack([spacing * np.arange(n_spins), np.zeros(n_spins), np.zeros(n_spins)])


def dipolar_hamiltonian(positions: np.ndarray, gamma_n: float) -> np.ndarray:
    """
    Full nuclear dipole-dipole Hamiltonian (MHz) for spins at ``positions`` (nm):
    sum_{i<j} d_ij [I_i.I_j - 3 (I_i.e_ij)(I_j.e_ij)], d_ij = (mu0/4pi) hbar gamma_n^2 / r_ij^3
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    dims = [2] * n
    ops = [[embed(op, i, dims) for op in (IX, IY, IZ)] for i in range(n)]
    prefactor = dipolar_prefactor(gamma_n, gamma_n)
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i, j in itertools.combinations(range(n), 2):
        r_vec = positions[j] - positions[i]
        r = float(np.linalg.norm(r_vec))
        if r == 0:
            raise DimensionMismatchError("two nuclear spins share a position", first=i, second=j)
        e = r_vec / r
        d = prefactor / r ** 3
        dot = sum(ops[i][k] @ ops[j][k] for k in range(3))
        proj_i = sum(e[k] * ops[i][k] for k in range(3))
        proj_j = sum(e[k] * ops[j][k] for k in range(3))
        h += d * (dot - 3 * proj_i @ proj_j)
    return h


def build_h_tot_multi(spins: Sequence[NuclearSpinRecord], dp: DressedParams, schedule: SweepSchedule,
                      gamma_n: float = 10.705, chain_coupling_khz: float = 0.0,
                      include_dipolar: bool = True) -> PiecewiseConstantHamiltonian:
    """
    Electron + N nuclei along the sweep, fixed dressed basis, dimension 2 * 2**N.

    H = 2 Delta(t) s_x +- Omega_eff s_z + sum_i 2 s_x (a_x'_i I_x^i + a_z'_i I_z^i)
        + gamma_n*B sum_i I_z^i + H_dd

    Spin positions give the dipolar couplings when every record has one;
    otherwise a chain with nearest-neighbour ``chain_coupling_khz`` is used.

    Raises:
        SystemTooLargeError: more than 6 nuclei
    """
    n = len(spins)
    if n > MAX_SPINS:
        raise SystemTooLargeError(f"{n} nuclear spins exceed the exact-diagonalization limit",
                                  n_spins=n, max_spins=MAX_SPINS)
    if n == 0:
        raise DimensionMismatchError("at least one nuclear spin is required")
    dims = [2] * n
    eye_n = np.eye(2 ** n, dtype=complex)

    static = np.zeros((2 * 2 ** n, 2 * 2 ** n), dtype=complex)
    for i, spin in enumerate(spins):
        coupling = spin.hyperfine.a_x_prime * embed(IX, i, dims) + spin.hyperfine.a_z_prime * embed(IZ, i, dims)
        static += 2 * tensor_product(SIGMA_X, coupling)
        static += dp.gamma_n_B * tensor_product(I2, embed(IZ, i, dims))

    if include_dipolar:
        if all(s.position is not None for s in spins):
            positions = np.array([s.position for s in spins], dtype=float)
        else:
            positions = chain_positions(n, chain_coupling_khz, gamma_n)
        if positions is not None and n > 1:
            static += tensor_product(I2, dipolar_hamiltonian(positions, gamma_n))

    durations, deltas = schedule.segments()
    generators = np.array([
        static + tensor_product(electron_hamiltonian(d, dp.omega_eff, dp.branch), eye_n) for d in deltas
    ])
    return PiecewiseConstantHamiltonian(np.asarray(durations), generators)


def run_cycles_multi(cfg: CycleConfig, spins: Sequence[NuclearSpinRecord], gamma_n: float = 10.705,
                     chain_coupling_khz: float = 0.0, include_dipolar: bool = True) -> PolarizationSeries:
    """
    Joint buildup of N <= 6 nuclei coupled to one electron.

    Always uses the full (non-rotating-wave) model; ``values`` is the mean
    polarization and ``per_spin`` the series of each nucleus. Phase averaging
    and the Stokes phase act as in the single-spin map, with every nucleus
    picking up the same phase per |up> between the crossings.
    """
    if not spans_resonances(cfg.schedule, cfg.dp):
        logger.warning("Sweep does not cross both Hartmann-Hahn resonances",
                       event_type="sweep_not_spanning", delta_start=cfg.schedule.delta_start,
                       delta_end=cfg.schedule.delta_end)
    h = build_h_tot_multi(spins, cfg.dp, cfg.schedule, gamma_n, chain_coupling_khz, include_dipolar)
    before, after = split_propagators(h, split_at_crossing(cfg.schedule))
    n = len(spins)
    unitaries = [after @ (nuclear_phase_kick(n, p)[:, None] * before) for p in _phases(cfg)]

    r_start = chi_states(cfg.schedule.delta_start, cfg.dp.omega_eff, cfg.dp.branch).rotation
    rho_e = r_start @ electron_reset_state(cfg.electron_reset_state, cfg.init_polarization) @ r_start.conj().T
    cycle_map = CycleMap(unitaries, rho_e, _damping(cfg), cfg.larmor_dephasing)
    series = iterate(cycle_map, np.eye(2 ** n, dtype=complex) / 2 ** n, cfg.n_cycles, target_sign(cfg.dp.branch))
    if n == 1:
        series = series.model_copy(update={"per_spin": [series.values]})
    logger.debug("Multi-spin run finished", event_type="cycles_done", n_spins=n, n_cycles=cfg.n_cycles,
                 final_polarization=series.values[-1])
    return series
