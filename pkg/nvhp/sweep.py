"""
ISE sweep schedules, Landau-Zener analytics and adiabaticity checks.

Numeric sweeps propagate the flip-flop Hamiltonian in the fixed dressed basis
{|+>, |->} x {up, down}; initial and final states are exchanged in the chi
basis of the first and last detuning of the schedule. One unit of frequency is
2*pi rad/us, so closed forms carry the explicit 2*pi factors of that
convention.
"""

import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import constants

from nvhp.dressed import chi_states, h_lab, hartmann_hahn_detunings, transfer_hamiltonian_fixed
from nvhp.errors import DimensionMismatchError, NoResonanceError, SpanTooSmallError
from nvhp.logging_config import get_logger
from nvhp.models.models import (AdiabaticityEnum, BranchEnum, DressedParams, HamiltonianModelEnum,
                                HyperfinePair, LzResult, NvConstants, OrientationParams, SweepSchedule)
from nvhp.orientation import cap_fraction, transition_frequency_minus
from nvhp.result_writers import ResultTable
from nvhp.spincore import (TWO_PI, PiecewiseConstantHamiltonian, evolution_operator, propagate,
                           spin_half_operators, tensor_product)

logger = get_logger("nvhp")

IX, _, IZ = spin_half_operators()
I2 = np.eye(2, dtype=complex)
DEFAULT_THRESHOLD = 5.0


########################################### Landau-Zener closed forms

def lz_mu(omega_eff: float, a_x_prime: float, rate_v: float, gamma_n_B: float) -> float:
    """
    Adiabaticity parameter of one Hartmann-Hahn crossing, P_LZ = exp(-2 pi mu).

    Each crossing is treated as an isolated linear Landau-Zener crossing. The
    phase-averaged numeric transfer follows 2 P_LZ (1 - P_LZ) to within 10%
    over mu in [0.01, 0.5] while ``crossing_overlap`` stays near 0.1 or below
    (Omega_eff = 1, v = 0.5 at 0.36 T). At Omega_eff = 3, v = 6 the overlap is
    0.72 and the closed form drifts from the numerics by tens of percent once
    mu exceeds 0.1.

    Raises:
        NoResonanceError: gamma_n*B <= Omega_eff
    """
    if rate_v == 0:
        raise ValueError("rate_v must be non-zero")
    if gamma_n_B <= omega_eff:
        raise NoResonanceError("Omega_eff must stay below gamma_n*B for a Hartmann-Hahn crossing",
                               gamma_n_B=gamma_n_B, omega_eff=omega_eff)
    _, half_gap = hartmann_hahn_detunings(gamma_n_B, omega_eff)
    root = 2 * half_gap  # sqrt(gamma^2 - Omega^2)
    return TWO_PI * omega_eff ** 2 * a_x_prime ** 2 / (8 * abs(rate_v) * gamma_n_B * root)


def lz_result(mu: float) -> LzResult:
    if mu < 0:
        raise ValueError("mu must be non-negative")
    p_lz = math.exp(-TWO_PI * mu) if math.isfinite(mu) else 0.0
    p_max = 4 * p_lz * (1 - p_lz)
    return LzResult(mu=mu, p_lz=p_lz, p_max=p_max, p_avg=p_max / 2)


def crossing_overlap(omega_eff: float, rate_v: float, gamma_n_B: float) -> float:
    """
    Landau-Zener window of one crossing, in detuning, over the half distance
    between the two crossings. Small values mean isolated crossings.
    """
    if rate_v == 0:
        raise ValueError("rate_v must be non-zero")
    _, half_gap = hartmann_hahn_detunings(gamma_n_B, omega_eff)
    if half_gap == 0:
        return math.inf
    # d(chi splitting)/dt at the crossing, MHz/us
    slope = 4 * abs(rate_v) * half_gap / gamma_n_B
    window = abs(rate_v) / math.sqrt(TWO_PI * slope)
    return window / half_gap


def lz_surface(omega_eff: float, gamma_n_B: float, a_values: Sequence[float],
               v_values: Sequence[float]) -> ResultTable:
    """P_max and the sweep-averaged transfer over an (a_x', v) grid, long format"""
    rows = {"a_x_mhz": [], "v_mhz_per_us": [], "mu": [], "p_lz": [], "p_max": [], "p_avg": []}
    for v in v_values:
        for a in a_values:
            res = lz_result(lz_mu(omega_eff, a, v, gamma_n_B))
            rows["a_x_mhz"].append(a)
            rows["v_mhz_per_us"].append(v)
            rows["mu"].append(res.mu)
            rows["p_lz"].append(res.p_lz)
            rows["p_max"].append(res.p_max)
            rows["p_avg"].append(res.p_avg)
    return ResultTable.from_columns("pmax_surface", rows)


########################################### Adiabaticity

def adiabaticity_margin_far(omega_eff: float, rate_v: float) -> float:
    """Omega_eff^2/|v| in angular units (2 pi times the MHz expression)"""
    if rate_v == 0:
        raise ValueError("rate_v must be non-zero")
    return TWO_PI * omega_eff ** 2 / abs(rate_v)


def adiabaticity_band(margin: float, threshold: float = DEFAULT_THRESHOLD) -> AdiabaticityEnum:
    if margin > threshold:
        return AdiabaticityEnum.PASS
    if margin >= 1.0:
        return AdiabaticityEnum.BORDERLINE
    return AdiabaticityEnum.FAIL


def electron_diabatic_probability(omega_eff: float, rate_v: float) -> float:
    """
    Landau-Zener probability that the dressed electron leaves chi- at Delta = 0,
    exp(-pi^2 Omega_eff^2 / (2|v|)) = exp(-pi/4 * margin).

    It bounds how well a fully polarized nucleus stays put over one cycle:
    1e-6 needs a margin of about 18.
    """
    return math.exp(-math.pi / 4 * adiabaticity_margin_far(omega_eff, rate_v))


def default_time_step(dp: DressedParams, hf: HyperfinePair) -> float:
    """min(1e-3 us, 1/(200 a_x' sin(phi_HH))): about 200 steps across the avoided crossing"""
    if hf.a_x_prime == 0:
        return 1e-3
    s = dp.omega_eff / dp.gamma_n_B if dp.gamma_n_B > dp.omega_eff else 1.0
    return min(1e-3, 1.0 / (200 * hf.a_x_prime * s))


########################################### Schedules

def ise_schedule(dp: DressedParams, rate_v: float, duration: float,
                 time_step: Optional[float] = None, hf: Optional[HyperfinePair] = None) -> SweepSchedule:
    """Linear sweep of the given duration, symmetric about Delta = 0"""
    if time_step is None:
        time_step = default_time_step(dp, hf) if hf is not None else 1e-3
    return SweepSchedule(delta_start=-rate_v * duration / 2, rate_v=rate_v, duration=duration,
                         time_step=time_step)


def spans_resonances(s: SweepSchedule, dp: DressedParams) -> bool:
    """True when the schedule passes through both Hartmann-Hahn detunings"""
    if dp.gamma_n_B < dp.omega_eff:
        return False
    lo, hi = hartmann_hahn_detunings(dp.gamma_n_B, dp.omega_eff)
    d_min, d_max = sorted((s.delta_start, s.delta_end))
    return d_min < lo and d_max > hi


def _generators(dp: DressedParams, hf: HyperfinePair, deltas: Sequence[float],
                model: HamiltonianModelEnum, include_secular: bool) -> np.ndarray:
    build = transfer_hamiltonian_fixed if model == HamiltonianModelEnum.TRANSFER else h_lab
    return np.array([build(dp.model_copy(update={"delta": float(d)}), hf, include_secular) for d in deltas])


def _rotation(delta: float, dp: DressedParams) -> np.ndarray:
    return tensor_product(chi_states(delta, dp.omega_eff, dp.branch).rotation, I2)


def _transfer_pair(branch: BranchEnum) -> Tuple[int, int]:
    """(initial, partner) chi-basis indices of the resonant flip-flop pair"""
    # index = 2*electron + nuclear; electron 0=chi+, 1=chi-; nuclear 0=up, 1=down
    if branch == BranchEnum.POSITIVE:
        return 2, 1  # chi- up -> chi+ down
    return 3, 0  # chi- down -> chi+ up


def up_counts(n_spins: int) -> np.ndarray:
    """Number of nuclear spins up in each basis state of an ``n_spins`` register"""
    states = np.arange(2 ** n_spins)
    downs = np.array([bin(k).count("1") for k in states])
    return n_spins - downs


def nuclear_phase_kick(n_spins: int, phase: float) -> np.ndarray:
    """Diagonal of 1_e (x) exp(i phase N_up) on electron x nuclear register"""
    return np.tile(np.exp(1j * phase * up_counts(n_spins)), 2)


def split_at_crossing(s: SweepSchedule) -> int:
    """Number of segments the sweep spends before passing Delta = 0 (0 when it never does)"""
    durations, _ = s.segments()
    edges = s.delta_start + s.rate_v * np.cumsum(durations)[:-1]
    crossed = np.flatnonzero(np.sign(edges) != np.sign(s.delta_start))
    return int(crossed[0]) + 1 if crossed.size else 0


def split_propagators(h: PiecewiseConstantHamiltonian, split: int) -> Tuple[np.ndarray, np.ndarray]:
    """(U before, U after) segment ``split`` of a piecewise-constant schedule"""
    before = (evolution_operator(PiecewiseConstantHamiltonian(h.durations[:split], h.generators[:split]))
              if split else np.eye(h.dim, dtype=complex))
    after = (evolution_operator(PiecewiseConstantHamiltonian(h.durations[split:], h.generators[split:]))
             if split < len(h.durations) else np.eye(h.dim, dtype=complex))
    return before, after


class SweepPropagator:
    """
    Propagator of one linear sweep in the fixed dressed basis, split at the
    Delta = 0 crossing.

    ``unitary(phase)`` advances the nuclear |up> amplitudes by ``phase`` at
    Delta = 0, between the two Hartmann-Hahn crossings, which shifts the
    relative phase of the two transfer paths. The electron is not touched:
    a state whose nucleus never flips evolves the same for every phase.
    """

    def __init__(self, dp: DressedParams, hf: HyperfinePair, s: SweepSchedule,
                 model: HamiltonianModelEnum = HamiltonianModelEnum.TRANSFER, include_secular: bool = True):
        if not spans_resonances(s, dp):
            logger.warning("Sweep does not cross both Hartmann-Hahn resonances",
                           event_type="sweep_not_spanning", delta_start=s.delta_start,
                           delta_end=s.delta_end, omega_eff=dp.omega_eff, gamma_n_B=dp.gamma_n_B)
        self.dp = dp
        self.schedule = s
        durations, deltas = s.segments()
        h = PiecewiseConstantHamiltonian(np.asarray(durations), _generators(dp, hf, deltas, model, include_secular))
        self.split = split_at_crossing(s)
        self.u_before, self.u_after = split_propagators(h, self.split)
        self.r_start = _rotation(s.delta_start, dp)
        self.r_end = _rotation(s.delta_end, dp)

    def unitary(self, phase: float = 0.0) -> np.ndarray:
        """Whole-sweep propagator with exp(i phase) on the nuclear |up> amplitudes at Delta = 0"""
        if phase == 0.0 or not self.split:
            return self.u_after @ self.u_before
        return self.u_after @ (nuclear_phase_kick(1, phase)[:, None] * self.u_before)

    def chi_unitary(self, phase: float = 0.0) -> np.ndarray:
        """Propagator mapping chi-basis states at the start to chi-basis states at the end"""
        return self.r_end.conj().T @ self.unitary(phase) @ self.r_start


def phase_grid(n_phases: int) -> np.ndarray:
    return TWO_PI * np.arange(n_phases) / n_phases


########################################### Numeric sweeps

def ise_single_sweep(initial: np.ndarray, dp: DressedParams, hf: HyperfinePair, s: SweepSchedule,
                     model: HamiltonianModelEnum = HamiltonianModelEnum.TRANSFER,
                     include_secular: bool = True) -> np.ndarray:
    """
    Propagate a 4x4 density matrix through one sweep.

    ``initial`` is given in the chi basis at Delta(t_start); the result is in
    the chi basis at Delta(t_end).
    """
    rho = np.asarray(initial, dtype=complex)
    if rho.shape != (4, 4):
        raise DimensionMismatchError("sweep state must be a 4x4 density matrix", shape=list(rho.shape))
    u = SweepPropagator(dp, hf, s, model, include_secular).chi_unitary()
    return u @ rho @ u.conj().T


def ise_transfer(dp: DressedParams, hf: HyperfinePair, s: SweepSchedule, n_phases: int = 16,
                 model: HamiltonianModelEnum = HamiltonianModelEnum.TRANSFER,
                 include_secular: bool = True) -> Dict[str, float]:
    """
    Flip-flop transfer probability of one sweep.

    Returns ``raw`` (single trajectory) and ``phase_averaged`` (the relative
    phase of the two transfer paths averaged over ``n_phases`` uniform values,
    see ``SweepPropagator``), plus ``leakage`` out of the resonant pair for the
    raw trajectory.
    """
    prop = SweepPropagator(dp, hf, s, model, include_secular)
    start, partner = _transfer_pair(dp.branch)

    def transfer(phase):
        column = prop.chi_unitary(phase)[:, start]
        return float(abs(column[partner]) ** 2), float(1 - abs(column[partner]) ** 2 - abs(column[start]) ** 2)

    raw, leakage = transfer(0.0)
    averaged = raw
    if n_phases >= 2:
        averaged = float(np.mean([transfer(p)[0] for p in phase_grid(n_phases)]))
    return {"raw": raw, "phase_averaged": averaged, "leakage": leakage}


########################################### State preparation

def _window_resonances(c: NvConstants, theta_window: Tuple[float, float], n: int = 201) -> np.ndarray:
    return np.array([transition_frequency_minus(OrientationParams(theta=t), c)
                     for t in np.linspace(theta_window[0], theta_window[1], n)])


def drive_envelope(n: int, ramp_fraction: float) -> np.ndarray:
    """sin^2 switch-on and switch-off over ``ramp_fraction`` of ``n`` segments at each end, 1 in between"""
    if not 0 <= ramp_fraction < 0.5:
        raise ValueError("ramp_fraction must lie in [0, 0.5)")
    if ramp_fraction == 0:
        return np.ones(n)
    s = (np.arange(n) + 0.5) / n
    edge = np.minimum(np.minimum(s, 1 - s) / ramp_fraction, 1.0)
    return np.sin(np.pi / 2 * edge) ** 2


def state_prep_sweep(theta: float, c: NvConstants, omega_minus: float, rate: float, span: float,
                     center: Optional[float] = None,
                     theta_window: Tuple[float, float] = (0.0, math.radians(20.0)),
                     time_step: float = 1e-4, ramp_fraction: float = 0.1) -> float:
    """
    |0> -> |-1> adiabatic passage with a linearly chirped microwave.

    The microwave frequency runs over ``span`` MHz centred on ``center``
    (default: the midpoint of the |0> <-> |-1> resonances of ``theta_window``)
    at ``rate`` MHz/us. The drive amplitude rises from zero over the first
    ``ramp_fraction`` of the sweep and falls back over the last; 0 switches
    it on and off abruptly. Returns the final |-1> population starting from |0>.

    Raises:
        SpanTooSmallError: some resonance of the window (or of ``theta``) lies outside the span
    """
    resonances = _window_resonances(c, theta_window)
    if center is None:
        center = 0.5 * (resonances.min() + resonances.max())
    f_theta = transition_frequency_minus(OrientationParams(theta=theta), c)
    lo, hi = center - span / 2, center + span / 2
    if resonances.min() <= lo or resonances.max() >= hi or not lo < f_theta < hi:
        raise SpanTooSmallError("microwave span does not include every resonance of the window",
                                span=span, center=center, window_min=float(resonances.min()),
                                window_max=float(resonances.max()), resonance=f_theta)

    duration = span / abs(rate)
    n = max(200, int(math.ceil(duration / time_step)))
    dt = duration / n
    # detuning of the microwave from this orientation's resonance at each segment midpoint
    detunings = lo + rate * dt * (np.arange(n) + 0.5) - f_theta if rate > 0 else \
        hi + rate * dt * (np.arange(n) + 0.5) - f_theta
    # basis (|-1>, |0>)
    generators = np.zeros((n, 2, 2), dtype=complex)
    generators[:, 0, 0] = detunings / 2
    generators[:, 1, 1] = -detunings / 2
    amplitude = omega_minus * drive_envelope(n, ramp_fraction)
    generators[:, 0, 1] = amplitude
    generators[:, 1, 0] = amplitude
    psi = propagate(PiecewiseConstantHamiltonian(np.full(n, dt), generators), np.array([0.0, 1.0], dtype=complex))
    return float(abs(psi[0]) ** 2)


########################################### Rotation and Brownian motion

def rotation_adiabaticity(gamma_n_B: float, rotation_angle: float, duration: float) -> float:
    """2 gamma_n*B / (d theta/dt) in angular units"""
    if duration <= 0:
        raise ValueError("duration must be positive")
    return 2 * TWO_PI * gamma_n_B / (rotation_angle / duration)


def rotation_following_fidelity(gamma_n_B: float, rotation_angle: float, duration: float,
                                n_steps: int = 4000) -> float:
    """
    Overlap with the instantaneous field-aligned state after rotating the field
    by ``rotation_angle`` in ``duration`` us under H_B = gamma_n*B I_theta(t).
    """
    angles = rotation_angle * (np.arange(n_steps) + 0.5) / n_steps
    generators = gamma_n_B * (np.cos(angles)[:, None, None] * IZ + np.sin(angles)[:, None, None] * IX)
    h = PiecewiseConstantHamiltonian(np.full(n_steps, duration / n_steps), generators)
    psi = propagate(h, np.array([1.0, 0.0], dtype=complex))
    target = np.array([math.cos(rotation_angle / 2), math.sin(rotation_angle / 2)], dtype=complex)
    return float(abs(target.conj() @ psi) ** 2)


def brownian_time(d_hydro: float, eta: float, temperature: float) -> float:
    """Rotational Brownian time 3 V_H eta / kT in us for a sphere of diameter ``d_hydro`` nm"""
    if d_hydro <= 0 or eta <= 0 or temperature <= 0:
        raise ValueError("diameter, viscosity and temperature must be positive")
    volume = math.pi / 6 * (d_hydro * 1e-9) ** 3
    return 3 * volume * eta / (constants.k * temperature) * 1e6


def sweeps_per_window(tau_b: float, sweep_duration: float) -> int:
    """Complete sweeps that fit in one active dwell"""
    return int(math.floor(tau_b / sweep_duration + 1e-12))


def expected_rotations_between_windows(theta_max: float) -> float:
    return 1.0 / cap_fraction(theta_max)
