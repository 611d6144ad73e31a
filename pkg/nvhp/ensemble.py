"""
Coherence-free ensemble model of nanodiamond DNP.

Each 13C keeps a scalar polarization. While the nanodiamond's NV sits inside
the active orientation window every sweep moves each spin towards the target
with its Landau-Zener transfer probability; in between, polarization spreads
by pairwise flip-flop rates that are switched off for frozen-core pairs
whenever the NV is in m_s = +-1. Orientations change every Brownian time.
"""

import itertools
import math
import zlib
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.spatial.transform import Rotation

from nvhp.dressed import dipolar_prefactor, hyperfine_from_geometry
from nvhp.errors import NoResonanceError
from nvhp.logging_config import get_logger
from nvhp.models.models import (ActiveWindowEnum, BranchEnum, DiffusionConfig, EnsembleSweepParams,
                                LatticeConfig, NuclearSpinRecord, NvConstants, TotalsRecord)
from nvhp.orientation import cap_fraction, initial_polarization, sample_orientations
from nvhp.result_writers import ResultTable
from nvhp.spincore import TWO_PI
from nvhp.sweep import lz_mu, lz_result, sweeps_per_window

logger = get_logger("nvhp")

CARBON_DENSITY_CM3 = 1.76e23
NV_AXIS = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
_FCC = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
DIAMOND_BASIS = np.vstack([_FCC, _FCC + 0.25])


def rng_for(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for one consumer of randomness, keyed by ``purpose``"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(purpose.encode()),)))


########################################### Lattice

def _nv_frame() -> Rotation:
    """Rotation taking the [111] NV axis onto z (the field direction)"""
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(NV_AXIS, z)
    angle = math.acos(float(NV_AXIS @ z))
    return Rotation.from_rotvec(axis / np.linalg.norm(axis) * angle)


def lattice_sites(cfg: LatticeConfig) -> np.ndarray:
    """The ``n_sites`` diamond sites nearest the NV, outside ``min_radius``, in the NV frame (nm)"""
    a = cfg.lattice_constant
    radius = (3 * cfg.n_sites * a ** 3 / (8 * 4 * math.pi)) ** (1 / 3)
    m = int(math.ceil(radius / a)) + 2
    cells = np.array(list(itertools.product(range(-m, m + 1), repeat=3)), dtype=float)
    sites = ((cells[:, None, :] + DIAMOND_BASIS[None, :, :]) * a).reshape(-1, 3)
    r = np.linalg.norm(sites, axis=1)
    keep = r > cfg.min_radius
    sites, r = sites[keep], r[keep]
    if len(sites) < cfg.n_sites:
        raise ValueError(f"lattice block holds only {len(sites)} sites")
    order = np.lexsort((sites[:, 2], sites[:, 1], sites[:, 0], np.round(r, 9)))
    return _nv_frame().apply(sites[order[:cfg.n_sites]])


def generate_lattice(cfg: LatticeConfig, c: Optional[NvConstants] = None) -> List[NuclearSpinRecord]:
    """Occupy each site with a 13C independently with probability ``abundance``"""
    c = c or NvConstants()
    sites = lattice_sites(cfg)
    seed = cfg.seed if cfg.seed is not None else 0
    occupied = rng_for(seed, "lattice").random(len(sites)) < cfg.abundance
    records = [
        NuclearSpinRecord(label=f"C{k}", hyperfine=hyperfine_from_geometry(site, c),
                          position=tuple(float(x) for x in site))
        for k, site in zip(np.flatnonzero(occupied), sites[occupied])
    ]
    logger.info(f"Generated {len(records)} nuclear spins on {cfg.n_sites} sites",
                event_type="lattice_generated", n_spins=len(records), n_sites=cfg.n_sites, seed=seed)
    return records


########################################### State

def classical_nv_populations(theta: float) -> Tuple[float, float, float]:
    """(p0, p+1, p-1) left by optical pumping along an axis at ``theta`` to the field"""
    c2 = math.cos(theta) ** 2
    s2 = 1.0 - c2
    return c2, s2 / 2, s2 / 2


@dataclass
class EnsembleState:
    p: np.ndarray
    nv_state: int = 0
    theta: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.size and np.max(np.abs(self.p)) > 1 + 1e-9:
            raise ValueError("nuclear polarization outside [-1, 1]")
        if self.nv_state not in (-1, 0, 1):
            raise ValueError("NV state must be one of -1, 0, +1")

    @property
    def polarization(self) -> float:
        return float(np.mean(self.p)) if self.p.size else 0.0


########################################### DNP

def transfer_probabilities(spins: Sequence[NuclearSpinRecord], sweep: EnsembleSweepParams,
                           gamma_n_B: float) -> np.ndarray:
    """Sweep-averaged flip-flop probability of every spin"""
    if gamma_n_B <= sweep.omega_eff:
        raise NoResonanceError("Omega_eff must stay below gamma_n*B", gamma_n_B=gamma_n_B,
                               omega_eff=sweep.omega_eff)
    return np.array([lz_result(lz_mu(sweep.omega_eff, s.hyperfine.a_x_prime, sweep.rate_v, gamma_n_B)).p_avg
                     for s in spins])


def in_active_window(theta: float, sweep: EnsembleSweepParams) -> bool:
    if sweep.active_window == ActiveWindowEnum.SMALL_ANGLE:
        return min(theta, math.pi - theta) <= math.radians(sweep.theta_max_deg)
    lo, hi = (math.radians(x) for x in sweep.band_deg)
    return lo <= theta <= hi


def window_polarization(theta: float, sweep: EnsembleSweepParams) -> float:
    branch = BranchEnum.POSITIVE if sweep.active_window == ActiveWindowEnum.SMALL_ANGLE else BranchEnum.NEGATIVE
    return initial_polarization(theta, branch)


def dnp_step(state: EnsembleState, p_avg: np.ndarray, eta: float = 1.0, target: float = 1.0) -> EnsembleState:
    """
    One sweep: p_i <- p_i + eta * p_avg_i * (target - p_i).

    ``eta`` is the electron polarization available at the current orientation.
    """
    p = state.p + eta * np.asarray(p_avg) * (target - state.p)
    return replace(state, p=np.clip(p, -1.0, 1.0))


########################################### Diffusion

def flip_flop_rates(positions: np.ndarray, gamma_n: float, scale: float = 1.0) -> np.ndarray:
    """
    Symmetric rate matrix W_ij = scale * d_ij^2 / Gamma_loc in 1/us.

    d_ij is the secular dipolar coupling (field along z) and Gamma_loc the
    median over spins of the strongest coupling of each spin.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    if n < 2:
        return np.zeros((n, n))
    diff = positions[:, None, :] - positions[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(r, 1.0)
    cos2 = diff[:, :, 2] ** 2 / r ** 2
    d = dipolar_prefactor(gamma_n, gamma_n) * (1 - 3 * cos2) / r ** 3
    np.fill_diagonal(d, 0.0)
    gamma_loc = float(np.median(np.max(np.abs(d), axis=1)))
    if gamma_loc == 0:
        return np.zeros((n, n))
    w = scale * d ** 2 / gamma_loc * TWO_PI
    np.fill_diagonal(w, 0.0)
    return w


@dataclass
class DiffusionKernel:
    """
    Exact propagators of dp/dt = -L p for the ungated and the frozen-core-gated
    rate matrices, cached per step length.
    """

    rates: np.ndarray
    frozen: np.ndarray
    time_step: float = 50.0
    _eig: Dict[bool, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)
    _cache: Dict[Tuple[bool, float], np.ndarray] = field(default_factory=dict, repr=False)

    @classmethod
    def from_spins(cls, spins: Sequence[NuclearSpinRecord], dcfg: DiffusionConfig,
                   gamma_n: float = 10.705) -> "DiffusionKernel":
        positions = np.array([s.position for s in spins], dtype=float).reshape(-1, 3)
        a_z = np.array([s.hyperfine.a_z_prime for s in spins])
        frozen = np.abs(a_z[:, None] - a_z[None, :]) > dcfg.frozen_core_threshold
        return cls(flip_flop_rates(positions, gamma_n, dcfg.flip_flop_rate_scale), frozen, dcfg.time_step)

    def rate_matrix(self, gated: bool) -> np.ndarray:
        return np.where(self.frozen, 0.0, self.rates) if gated else self.rates

    def propagator(self, gated: bool, dt: float) -> np.ndarray:
        key = (gated, round(dt, 9))
        if key not in self._cache:
            w = self.rate_matrix(gated)
            if gated not in self._eig:
                laplacian = np.diag(w.sum(axis=1)) - w
                self._eig[gated] = np.linalg.eigh(laplacian)
            lam, vecs = self._eig[gated]
            prop = (vecs * np.exp(-np.clip(lam, 0.0, None) * dt)) @ vecs.T
            isolated = ~np.any(w > 0, axis=1)
            prop[isolated, :] = 0.0
            prop[:, isolated] = 0.0
            prop[isolated, isolated] = 1.0
            self._cache[key] = prop
        return self._cache[key]


def diffusion_step(state: EnsembleState, kernel: DiffusionKernel, dt: float) -> EnsembleState:
    """
    Spread polarization for ``dt`` us; pairs in the frozen core exchange nothing
    while the NV is in m_s = +-1. The sum of polarizations is conserved.
    """
    if dt <= 0 or state.p.size == 0:
        return replace(state, time=state.time + max(dt, 0.0))
    gated = state.nv_state != 0
    total = math.fsum(state.p)
    p = state.p.copy()
    remaining = dt
    while remaining > 1e-9:
        step = min(remaining, kernel.time_step)
        p = kernel.propagator(gated, step) @ p
        p += (total - math.fsum(p)) / p.size
        remaining -= step
    return replace(state, p=p, time=state.time + dt)


########################################### Brownian rotation

def brownian_schedule(tau_b: float, total: float, seed: int) -> List[Tuple[float, float, float]]:
    """(theta, phi, dwell) windows covering ``total`` us, a fresh random orientation every ``tau_b``"""
    if tau_b <= 0:
        raise ValueError("tau_b must be positive")
    n = int(math.ceil(total / tau_b - 1e-12))
    theta, phi = sample_orientations(rng_for(seed, "brownian"), n)
    dwell = np.full(n, tau_b)
    if n:
        dwell[-1] = total - tau_b * (n - 1)
    return [(float(t), float(f), float(d)) for t, f, d in zip(theta, phi, dwell)]


########################################### Driver

def run_ensemble(spins: Sequence[NuclearSpinRecord], dcfg: DiffusionConfig, sweep: EnsembleSweepParams,
                 duration: float, tau_b: float, c: Optional[NvConstants] = None, seed: int = 0,
                 schedule: Optional[Sequence[Tuple[float, float, float]]] = None) -> ResultTable:
    """
    Polarization buildup of one nanodiamond over ``duration`` us.

    Active windows run ``floor(dwell / sweep_duration)`` sweeps, each a DNP
    step followed by gated diffusion for one sweep; the rest of the dwell and
    every inactive window are pure diffusion with the NV state drawn from the
    optical-pumping populations.
    """
    c = c or NvConstants()
    gamma_n_B = sweep.gamma_n_B or c.gamma_n_B
    p_avg = transfer_probabilities(spins, sweep, gamma_n_B)
    kernel = DiffusionKernel.from_spins(spins, dcfg, c.gamma_n)
    windows = schedule if schedule is not None else brownian_schedule(tau_b, duration, seed)
    nv_draws = rng_for(seed, "nv-state").random(len(windows))

    state = EnsembleState(p=np.zeros(len(spins)))
    rows = {"time_us": [0.0], "polarization": [0.0], "active": [0], "nv_state": [0], "theta_deg": [math.nan]}
    n_active = 0
    for (theta, _, dwell), u in zip(windows, nv_draws):
        active = in_active_window(theta, sweep)
        if active:
            n_active += 1
            state = replace(state, theta=theta, nv_state=-1)
            eta = window_polarization(theta, sweep)
            n_sweeps = sweeps_per_window(dwell, sweep.sweep_duration)
            for _ in range(n_sweeps):
                state = dnp_step(state, p_avg, eta)
                state = diffusion_step(state, kernel, sweep.sweep_duration)
            state = diffusion_step(state, kernel, dwell - n_sweeps * sweep.sweep_duration)
        else:
            p0, p_plus, _ = classical_nv_populations(theta)
            nv = 0 if u < p0 else (1 if u < p0 + p_plus else -1)
            state = diffusion_step(replace(state, theta=theta, nv_state=nv), kernel, dwell)
        rows["time_us"].append(state.time)
        rows["polarization"].append(state.polarization)
        rows["active"].append(int(active))
        rows["nv_state"].append(state.nv_state)
        rows["theta_deg"].append(math.degrees(theta))

    summary = {
        "final_polarization": rows["polarization"][-1],
        "n_spins": len(spins),
        "n_windows": len(windows),
        "n_active_windows": n_active,
        "active_fraction": n_active / len(windows) if windows else 0.0,
    }
    summary.update(buildup_fit(rows["time_us"], rows["polarization"]))
    logger.info("Ensemble run finished", event_type="ensemble_done", seed=seed, **summary)
    return ResultTable.from_columns("ensemble", rows, summary=summary)


def buildup_fit(times: Sequence[float], polarization: Sequence[float]) -> Dict[str, float]:
    """Linear fit of P(t): slope per second and R^2"""
    if len(times) < 3 or np.ptp(polarization) == 0:
        return {"slope_per_s": 0.0, "r_squared": 0.0}
    fit = stats.linregress(np.asarray(times) * 1e-6, polarization)
    return {"slope_per_s": float(fit.slope), "r_squared": float(fit.rvalue ** 2)}


########################################### Powder totals

def estimate_totals(powder_volume_mm3: float, nd_diameter_nm: float, nv_concentration_cm3: float,
                    abundance: float, achieved_polarization: float = 0.2, nuclear_t1_s: float = 120.0,
                    tau_b: float = 205.0, sweep_duration: float = 10.0,
                    theta_max_deg: float = 20.0) -> TotalsRecord:
    """
    NV and 13C counts of a densely packed nanodiamond powder.

    13C counts use the diamond atomic density 1.76e23 cm^-3; the sweep budget
    counts active windows reached by one NV within a nuclear T1.
    """
    if min(powder_volume_mm3, nd_diameter_nm, nv_concentration_cm3) <= 0:
        raise ValueError("volume, diameter and concentration must be positive")
    powder_cm3 = powder_volume_mm3 * 1e-3
    nd_cm3 = math.pi / 6 * (nd_diameter_nm * 1e-7) ** 3
    total_c13 = CARBON_DENSITY_CM3 * abundance * powder_cm3
    per_window = sweeps_per_window(tau_b, sweep_duration)
    active_windows = nuclear_t1_s * 1e6 * cap_fraction(math.radians(theta_max_deg)) / tau_b
    return TotalsRecord(
        nd_volume_cm3=nd_cm3,
        nv_per_nd=nv_concentration_cm3 * nd_cm3,
        n_nanodiamonds=powder_cm3 / nd_cm3,
        total_nv=nv_concentration_cm3 * powder_cm3,
        c13_per_nd=CARBON_DENSITY_CM3 * abundance * nd_cm3,
        total_c13=total_c13,
        polarized_c13=total_c13 * achieved_polarization,
        sweeps_per_window=per_window,
        sweeps_within_t1=active_windows * per_window,
    )
