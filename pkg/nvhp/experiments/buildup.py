"""
Polarization cycle experiments: single-nucleus buildup, depolarization of a
polarized nucleus, and the joint buildup of a few dipolar-coupled nuclei.
"""

from typing import Dict, List, Optional, Union

from nvhp.cycles import run_cycles_multi, run_cycles_single, run_depolarization
from nvhp.models.models import (CycleConfig, CycleSection, DepolarizeSection, DressedParams, ElectronResetEnum,
                                HamiltonianModelEnum, HyperfinePair, MultispinSection, NuclearSpinRecord,
                                RunConfig)
from nvhp.result_writers import ResultTable
from nvhp.runner import parallel_map
from nvhp.sweep import (adiabaticity_band, adiabaticity_margin_far, crossing_overlap, default_time_step,
                        ise_schedule, lz_mu, lz_result)

Section = Union[CycleSection, DepolarizeSection, MultispinSection]


def cycle_config(cfg: RunConfig, section: Section, reset: ElectronResetEnum = ElectronResetEnum.CHI_MINUS,
                 model: Optional[HamiltonianModelEnum] = None) -> CycleConfig:
    """CycleConfig for a section; the time step follows the strongest coupling unless given"""
    gamma_n_B = section.gamma_n_B or cfg.physics.gamma_n_B
    branch = getattr(section, "branch", None)
    dp = DressedParams(omega_eff=section.omega_eff, gamma_n_B=gamma_n_B,
                       **({"branch": branch} if branch else {}))
    strongest = max(section.spins, key=lambda s: s.a_x_prime)
    time_step = section.time_step or default_time_step(dp, HyperfinePair(a_x_prime=strongest.a_x_prime))
    extra = {"n_phases": section.n_phases, "larmor_dephasing": section.larmor_dephasing}
    if isinstance(section, CycleSection):
        extra.update(include_secular=section.include_secular, t1rho=section.t1rho,
                     init_polarization=section.init_polarization, stokes_phase=section.stokes_phase)
    return CycleConfig(
        n_cycles=section.n_cycles,
        schedule=ise_schedule(dp, section.rate_v, section.sweep_duration, time_step),
        dp=dp,
        electron_reset_state=reset,
        model=model or getattr(section, "model", HamiltonianModelEnum.FULL),
        **extra,
    )


def _sweep_summary(cc: CycleConfig) -> Dict[str, object]:
    margin = adiabaticity_margin_far(cc.dp.omega_eff, cc.schedule.rate_v)
    summary = {"margin_far": margin, "adiabaticity": adiabaticity_band(margin).value,
               "delta_start_mhz": cc.schedule.delta_start, "delta_end_mhz": cc.schedule.delta_end}
    if cc.dp.gamma_n_B > cc.dp.omega_eff:
        summary["crossing_overlap"] = crossing_overlap(cc.dp.omega_eff, cc.schedule.rate_v, cc.dp.gamma_n_B)
    return summary


def _series_table(name: str, section: Section, series_list, cc: CycleConfig) -> ResultTable:
    columns = {"cycle": [], "spin": [], "a_x_mhz": [], "a_z_mhz": [], "polarization": []}
    summary = _sweep_summary(cc)
    for k, (spin, series) in enumerate(zip(section.spins, series_list), start=1):
        for cycle, p in enumerate(series.values):
            columns["cycle"].append(cycle)
            columns["spin"].append(k)
            columns["a_x_mhz"].append(spin.a_x_prime)
            columns["a_z_mhz"].append(spin.a_z_prime)
            columns["polarization"].append(p)
        summary[f"spin{k}"] = {"first_cycle": series.values[1], "final": series.values[-1]}
        if cc.dp.gamma_n_B > cc.dp.omega_eff:
            analytic = lz_result(lz_mu(cc.dp.omega_eff, spin.a_x_prime, cc.schedule.rate_v, cc.dp.gamma_n_B))
            summary[f"spin{k}"].update(p_max_analytic=analytic.p_max, p_avg_analytic=analytic.p_avg)
    return ResultTable.from_columns(name, columns, summary=summary)


def run_cycle(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.cycle
    cc = cycle_config(cfg, section)
    series = parallel_map(
        lambda spin: run_cycles_single(cc, HyperfinePair(a_x_prime=spin.a_x_prime, a_z_prime=spin.a_z_prime)),
        section.spins)
    return [_series_table("cycle", section, series, cc)]


def run_depolarize(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.depolarize
    cc = cycle_config(cfg, section, reset=ElectronResetEnum.UNPOLARIZED)
    series = parallel_map(
        lambda spin: run_depolarization(cc, HyperfinePair(a_x_prime=spin.a_x_prime, a_z_prime=spin.a_z_prime)),
        section.spins)
    return [_series_table("depolarize", section, series, cc)]


def spin_records(section: MultispinSection) -> List[NuclearSpinRecord]:
    return [NuclearSpinRecord(label=f"n{k}", hyperfine=HyperfinePair(a_x_prime=s.a_x_prime, a_z_prime=s.a_z_prime),
                              position=s.position)
            for k, s in enumerate(section.spins, start=1)]


def run_multispin(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.multispin
    cc = cycle_config(cfg, section, model=HamiltonianModelEnum.FULL)
    spins = spin_records(section)
    variants = [True, False] if section.compare_without_dipolar else [True]
    results = parallel_map(
        lambda dipolar: run_cycles_multi(cc, spins, cfg.physics.gamma_n, section.chain_coupling_khz, dipolar),
        variants)

    with_dd = results[0]
    columns = {"cycle": list(range(len(with_dd.values))), "aggregate": with_dd.values}
    summary = {**_sweep_summary(cc), "n_spins": len(spins), "final_aggregate": with_dd.values[-1],
               "chain_coupling_khz": section.chain_coupling_khz}
    if len(results) > 1:
        columns["aggregate_no_dipolar"] = results[1].values
        summary["max_abs_difference"] = max(abs(a - b) for a, b in zip(with_dd.values, results[1].values))
    for spin, series in zip(spins, with_dd.per_spin):
        columns[f"p_{spin.label}"] = series
    return [ResultTable.from_columns("multispin", columns, summary=summary)]
