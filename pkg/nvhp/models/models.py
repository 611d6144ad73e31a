"""
Models module - defines Pydantic models and enums for physical parameters,
sweep schedules, experiment configuration and result typing throughout nvhp.

Frequency-like fields are MHz with an implicit 2*pi, rates are MHz/us and
times are us unless a field name says otherwise.
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ExperimentEnum(str, Enum):
    LEVELS = "levels"
    PMAX_SURFACE = "pmax-surface"
    PREP = "prep"
    CYCLE = "cycle"
    DEPOLARIZE = "depolarize"
    MULTISPIN = "multispin"
    ENSEMBLE = "ensemble"
    TOTALS = "totals"
    VALIDATE_SECULAR = "validate-secular"
    ROTATION = "rotation"


class BranchEnum(str, Enum):
    POSITIVE = "positive-D"
    NEGATIVE = "negative-D"


class ElectronResetEnum(str, Enum):
    CHI_MINUS = "chi-minus"
    CHI_PLUS = "chi-plus"
    UNPOLARIZED = "unpolarized"


class HamiltonianModelEnum(str, Enum):
    # rotating-wave flip-flop Hamiltonian rotated into the fixed dressed basis
    TRANSFER = "transfer"
    # dressed electron + full hyperfine, the one-spin case of the multi-spin model
    FULL = "full"


class ActiveWindowEnum(str, Enum):
    SMALL_ANGLE = "small-angle"
    LARGE_ANGLE = "large-angle"


class AdiabaticityEnum(str, Enum):
    PASS = "pass"
    BORDERLINE = "borderline"
    FAIL = "fail"


class FrozenModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NvConstants(FrozenModel):
    D: float = Field(2870.0, gt=0, description="Zero-field splitting (MHz)")
    E: float = Field(20.0, ge=0, description="Strain splitting (MHz)")
    gamma_e: float = Field(28700.0, gt=0, description="Electron gyromagnetic ratio (MHz/T)")
    gamma_n: float = Field(10.705, gt=0, description="13C gyromagnetic ratio (MHz/T)")
    B: float = Field(0.36, gt=0, description="Magnetic field (T)")

    @property
    def gamma_e_B(self) -> float:
        return self.gamma_e * self.B

    @property
    def gamma_n_B(self) -> float:
        return self.gamma_n * self.B


class OrientationParams(FrozenModel):
    theta: float = Field(..., ge=0.0, le=math.pi, description="Polar angle between field and NV axis (rad)")
    phi: float = Field(0.0, ge=0.0, lt=2 * math.pi, description="Azimuthal angle (rad)")

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float = 0.0) -> "OrientationParams":
        return cls(theta=math.radians(theta_deg), phi=math.radians(phi_deg) % (2 * math.pi))


class EffectiveNvEnergies(FrozenModel):
    d_theta: float
    delta_theta: float
    g1: complex
    g2: complex


class DressedParams(FrozenModel):
    omega_drive: Optional[float] = Field(None, ge=0, description="Single-quantum drive amplitude Omega (MHz)")
    omega_eff: float = Field(..., gt=0, description="Double-quantum Rabi frequency (MHz)")
    delta: float = Field(0.0, description="Detuning of the double-quantum drive (MHz)")
    gamma_n_B: float = Field(..., gt=0, description="Nuclear Larmor frequency (MHz)")
    branch: BranchEnum = BranchEnum.POSITIVE

    @property
    def sign(self) -> int:
        return 1 if self.branch == BranchEnum.POSITIVE else -1


class HyperfinePair(FrozenModel):
    a_x_prime: float = Field(..., ge=0, description="Pseudosecular hyperfine coupling (MHz)")
    a_z_prime: float = Field(0.0, description="Secular hyperfine coupling (MHz)")


class SweepSchedule(FrozenModel):
    delta_start: float = Field(..., description="Detuning at the start of the sweep (MHz)")
    rate_v: float = Field(..., description="Sweep rate (MHz/us)")
    duration: float = Field(..., gt=0, description="Sweep duration (us)")
    time_step: float = Field(1e-3, gt=0, description="Discretization step (us)")

    @field_validator("rate_v")
    @classmethod
    def nonzero_rate(cls, v):
        if v == 0:
            raise ValueError("rate_v must be non-zero")
        return v

    @property
    def delta_end(self) -> float:
        return self.delta_start + self.rate_v * self.duration

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.duration / self.time_step - 1e-9)))

    def segments(self) -> Tuple[List[float], List[float]]:
        """Segment durations and the detuning at each segment midpoint"""
        n = self.n_steps
        dt = self.duration / n
        durations = [dt] * n
        deltas = [self.delta_start + self.rate_v * dt * (j + 0.5) for j in range(n)]
        return durations, deltas


class LzResult(FrozenModel):
    mu: float = Field(..., ge=0)
    p_lz: float = Field(..., ge=0, le=1)
    p_max: float = Field(..., ge=0, le=1)
    p_avg: float = Field(..., ge=0, le=0.5)


class NuclearSpinRecord(FrozenModel):
    label: str
    hyperfine: HyperfinePair
    position: Optional[Tuple[float, float, float]] = Field(None, description="Position relative to the NV (nm)")


def _phase_grid_size(v: int) -> int:
    if v == 1:
        raise ValueError("n_phases must be 0 (off) or at least 2")
    return v


class CycleConfig(FrozenModel):
    n_cycles: int = Field(..., ge=1)
    schedule: SweepSchedule
    dp: DressedParams
    electron_reset_state: ElectronResetEnum = ElectronResetEnum.CHI_MINUS
    n_phases: int = Field(0, ge=0, description="0 disables phase averaging")
    model: HamiltonianModelEnum = HamiltonianModelEnum.TRANSFER
    include_secular: bool = True
    t1rho: Optional[float] = Field(None, gt=0, description="Electron rotating-frame lifetime (us); off when unset")
    init_polarization: float = Field(1.0, ge=0, le=1, description="Weight of the prepared electron state in the reset mixture")
    stokes_phase: float = Field(0.0, description="Relative phase of the two transfer paths (rad); offsets the averaging grid")
    larmor_dephasing: bool = Field(True, description="Drop coherence between nuclear states of different total I_z' before each cycle")

    @field_validator("n_phases")
    @classmethod
    def phases_are_a_grid(cls, v):
        return _phase_grid_size(v)


class PolarizationSeries(FrozenModel):
    values: List[float] = Field(..., description="Aggregate polarization after each cycle, index 0 is the initial state")
    per_spin: Optional[List[List[float]]] = None

    @field_validator("values")
    @classmethod
    def bounded(cls, v):
        if any(abs(p) > 1 + 1e-8 for p in v):
            raise ValueError("polarization outside [-1, 1]")
        return v


class LatticeConfig(FrozenModel):
    n_sites: int = Field(50000, gt=0)
    abundance: float = Field(0.011, gt=0, le=1)
    lattice_constant: float = Field(0.357, gt=0, description="Diamond cubic lattice constant (nm)")
    min_radius: float = Field(0.15, gt=0, description="Sites closer than this to the NV are excluded (nm)")
    seed: Optional[int] = Field(None, ge=0, description="Fixes the 13C configuration; unset draws it from the run seed")


class DiffusionConfig(FrozenModel):
    flip_flop_rate_scale: float = Field(1.0, gt=0)
    frozen_core_threshold: float = Field(0.002, gt=0, description="Secular mismatch above which a pair is frozen (MHz)")
    time_step: float = Field(50.0, gt=0, description="Longest exact diffusion step (us)")


class EnsembleSweepParams(FrozenModel):
    omega_eff: float = Field(2.3, gt=0)
    rate_v: float = Field(0.8, gt=0)
    sweep_duration: float = Field(70.0, gt=0)
    gamma_n_B: Optional[float] = Field(None, gt=0, description="Defaults to gamma_n * B")
    active_window: ActiveWindowEnum = ActiveWindowEnum.SMALL_ANGLE
    theta_max_deg: float = Field(20.0, gt=0, le=90)
    band_deg: Tuple[float, float] = (70.0, 110.0)

    @field_validator("band_deg")
    @classmethod
    def ordered_band(cls, v):
        if not 0 < v[0] <= v[1] < 180:
            raise ValueError("band must satisfy 0 < lo <= hi < 180")
        return v


# ---- experiment sections ----

class LevelsSection(FrozenModel):
    omega_eff: float = Field(2.2, gt=0)
    gamma_n_B: Optional[float] = Field(None, gt=0)
    a_x_prime: float = Field(1.75, ge=0)
    a_z_prime: float = 0.0
    branch: BranchEnum = BranchEnum.POSITIVE
    delta_min: float = -6.0
    delta_max: float = 6.0
    n_points: int = Field(1201, ge=2)

    @model_validator(mode="after")
    def ordered_grid(self):
        if self.delta_max <= self.delta_min:
            raise ValueError("delta_max must exceed delta_min")
        return self


class PmaxSurfaceSection(FrozenModel):
    omega_eff: float = Field(3.6, gt=0)
    gamma_n_B: Optional[float] = Field(None, gt=0)
    a_min: float = Field(0.0, ge=0)
    a_max: float = Field(1.0, gt=0)
    n_a: int = Field(51, ge=2)
    v_min: float = Field(0.5, gt=0)
    v_max: float = Field(10.0, gt=0)
    n_v: int = Field(20, ge=2)


class PrepSection(FrozenModel):
    omega_minus: float = Field(20.0, gt=0)
    span: float = Field(870.0, gt=0)
    duration: float = Field(0.4, gt=0)
    theta_window_deg: Tuple[float, float] = (0.0, 20.0)
    n_theta: int = Field(21, ge=1)
    time_step: float = Field(1e-4, gt=0)
    center_mhz: Optional[float] = Field(None, gt=0, description="Microwave sweep centre; defaults to the middle of the window resonances")
    ramp_fraction: float = Field(0.1, ge=0, lt=0.5, description="Share of the sweep spent switching the drive on, and again off")


class SpinSpec(FrozenModel):
    a_x_prime: float = Field(..., ge=0)
    a_z_prime: float = 0.0
    position: Optional[Tuple[float, float, float]] = None


class CycleSection(FrozenModel):
    spins: List[SpinSpec] = Field(default_factory=lambda: [SpinSpec(a_x_prime=0.6, a_z_prime=0.64)])
    omega_eff: float = Field(3.0, gt=0)
    gamma_n_B: Optional[float] = Field(None, gt=0)
    rate_v: float = Field(6.0, gt=0)
    sweep_duration: float = Field(10.0, gt=0)
    time_step: Optional[float] = Field(None, gt=0)
    n_cycles: int = Field(30, ge=1)
    n_phases: int = Field(0, ge=0)
    model: HamiltonianModelEnum = HamiltonianModelEnum.TRANSFER
    branch: BranchEnum = BranchEnum.POSITIVE
    include_secular: bool = True
    t1rho: Optional[float] = Field(None, gt=0)
    init_polarization: float = Field(1.0, ge=0, le=1)
    stokes_phase: float = 0.0
    larmor_dephasing: bool = True

    @field_validator("n_phases")
    @classmethod
    def phases_are_a_grid(cls, v):
        return _phase_grid_size(v)


class DepolarizeSection(CycleSection):
    omega_eff: float = Field(3.5, gt=0)
    n_cycles: int = Field(10, ge=1)


def _default_chain_spins() -> List[SpinSpec]:
    return [SpinSpec(a_x_prime=a) for a in (0.7, 0.5, 0.4, 0.32, 0.2)]


class MultispinSection(FrozenModel):
    spins: List[SpinSpec] = Field(default_factory=_default_chain_spins)
    chain_coupling_khz: float = Field(2.0, ge=0, description="Nearest-neighbour dipolar coupling when positions are omitted")
    compare_without_dipolar: bool = True
    omega_eff: float = Field(3.23, gt=0)
    gamma_n_B: Optional[float] = Field(None, gt=0)
    rate_v: float = Field(6.0, gt=0)
    sweep_duration: float = Field(10.0, gt=0)
    time_step: Optional[float] = Field(None, gt=0)
    n_cycles: int = Field(20, ge=1)
    n_phases: int = Field(0, ge=0)
    larmor_dephasing: bool = True

    @field_validator("n_phases")
    @classmethod
    def phases_are_a_grid(cls, v):
        return _phase_grid_size(v)

    @field_validator("spins")
    @classmethod
    def not_empty(cls, v):
        if not v:
            raise ValueError("at least one spin is required")
        return v


class EnsembleSection(FrozenModel):
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig)
    sweep: EnsembleSweepParams = Field(default_factory=EnsembleSweepParams)
    duration: float = Field(2.0e6, gt=0, description="Simulated time (us)")
    tau_b: float = Field(205.0, gt=0, description="Brownian rotation time (us)")
    n_seeds: int = Field(1, ge=1)


class TotalsSection(FrozenModel):
    powder_volume_mm3: float = Field(1.0, gt=0)
    nd_diameter_nm: float = Field(85.0, gt=0)
    nv_concentration_cm3: float = Field(2e18, gt=0)
    abundance: float = Field(0.011, ge=0, le=1)
    achieved_polarization: float = Field(0.2, ge=0, le=1)
    nuclear_t1_s: float = Field(120.0, gt=0)
    tau_b: float = Field(205.0, gt=0)
    sweep_duration: float = Field(10.0, gt=0)


class ValidateSecularSection(FrozenModel):
    theta_deg: float = Field(10.0, ge=0, le=180)
    fields_T: List[float] = Field(default_factory=lambda: [0.36, 0.54])
    duration: float = Field(1.0, gt=0)
    n_points: int = Field(200001, ge=2)
    output_points: int = Field(2001, ge=2)

    @field_validator("fields_T")
    @classmethod
    def positive_fields(cls, v):
        if not v or any(b <= 0 for b in v):
            raise ValueError("fields must be positive")
        return v


class RotationSection(FrozenModel):
    gamma_n_B: float = Field(4.0, gt=0)
    angle_deg: float = Field(180.0, gt=0)
    durations: List[float] = Field(default_factory=lambda: [0.078, 0.2, 0.78, 2.0, 7.8])
    n_steps: int = Field(4000, ge=10)
    threshold: float = Field(5.0, gt=0)


class RunConfig(FrozenModel):
    experiment: ExperimentEnum = Field(..., description="Experiment to run")
    seed: int = 0
    output: Optional[str] = Field(None, description="Output directory")
    physics: NvConstants = Field(default_factory=NvConstants)
    levels: LevelsSection = Field(default_factory=LevelsSection)
    pmax_surface: PmaxSurfaceSection = Field(default_factory=PmaxSurfaceSection)
    prep: PrepSection = Field(default_factory=PrepSection)
    cycle: CycleSection = Field(default_factory=CycleSection)
    depolarize: DepolarizeSection = Field(default_factory=DepolarizeSection)
    multispin: MultispinSection = Field(default_factory=MultispinSection)
    ensemble: EnsembleSection = Field(default_factory=EnsembleSection)
    totals: TotalsSection = Field(default_factory=TotalsSection)
    validate_secular: ValidateSecularSection = Field(default_factory=ValidateSecularSection)
    rotation: RotationSection = Field(default_factory=RotationSection)


class RunStatusEnum(str, Enum):
    RUNNING = "running"
    FINISHED = "finished"
    FAILED = "failed"


class TotalsRecord(FrozenModel):
    """Powder-scale bookkeeping of NV centres and 13C nuclei"""

    nd_volume_cm3: float
    nv_per_nd: float
    n_nanodiamonds: float
    total_nv: float
    c13_per_nd: float
    total_c13: float
    polarized_c13: float
    sweeps_per_window: int
    sweeps_within_t1: float
    quoted_nv_per_nd: float = 642.0
    quoted_total_c13: float = 8.18e18
