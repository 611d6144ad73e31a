"""
Ensemble buildup over many Brownian rotations and the powder-scale totals.
"""

from typing import List

import numpy as np

from nvhp.ensemble import buildup_fit, estimate_totals, generate_lattice, run_ensemble
from nvhp.models.models import LatticeConfig, RunConfig
from nvhp.result_writers import ResultTable
from nvhp.runner import parallel_map


def lattice_for_run(lattice: LatticeConfig, run_seed: int) -> LatticeConfig:
    """The configured lattice; without its own seed the 13C draw follows the run seed"""
    if lattice.seed is not None:
        return lattice
    return lattice.model_copy(update={"seed": run_seed})


def run_ensemble_experiment(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.ensemble

    def trajectory(seed):
        spins = generate_lattice(lattice_for_run(section.lattice, seed), cfg.physics)
        return run_ensemble(spins, section.diffusion, section.sweep, section.duration, section.tau_b,
                            cfg.physics, seed)

    seeds = [cfg.seed + k for k in range(section.n_seeds)]
    runs = parallel_map(trajectory, seeds)
    if len(runs) == 1:
        return runs

    frame = runs[0].frame
    columns = {"time_us": frame["time_us"].to_numpy()}
    stacked = np.array([run.frame["polarization"].to_numpy() for run in runs])
    columns["polarization"] = stacked.mean(axis=0)
    columns["polarization_std"] = stacked.std(axis=0)
    for seed, run in zip(seeds, runs):
        columns[f"polarization_seed{seed}"] = run.frame["polarization"].to_numpy()

    summary = {
        "n_seeds": len(runs),
        "final_polarization": float(columns["polarization"][-1]),
        "active_fraction": float(np.mean([run.summary["active_fraction"] for run in runs])),
        "mean_n_spins": float(np.mean([run.summary["n_spins"] for run in runs])),
    }
    summary.update(buildup_fit(columns["time_us"], columns["polarization"]))
    return [ResultTable.from_columns("ensemble", columns, summary=summary)]


def run_totals(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.totals
    record = estimate_totals(section.powder_volume_mm3, section.nd_diameter_nm, section.nv_concentration_cm3,
                             section.abundance, section.achieved_polarization, section.nuclear_t1_s,
                             section.tau_b, section.sweep_duration)
    values = record.model_dump()
    return [ResultTable.from_columns("totals", {
        "quantity": list(values),
        "value": [float(v) for v in values.values()],
    }, summary=values)]
