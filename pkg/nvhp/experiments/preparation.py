"""
Electron preparation and validity checks: the chirped |0> -> |-1> passage,
the secular approximation of the NV Hamiltonian, and adiabatic following of
a rotating field by the nuclear spin.
"""

import math
from typing import List

import numpy as np

from nvhp.models.models import OrientationParams, RunConfig
from nvhp.orientation import secular_population_trace, transition_frequency_minus
from nvhp.result_writers import ResultTable
from nvhp.runner import parallel_map
from nvhp.spincore import TWO_PI
from nvhp.sweep import adiabaticity_band, rotation_adiabaticity, rotation_following_fidelity, state_prep_sweep


def run_prep(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.prep
    c = cfg.physics
    window = tuple(math.radians(x) for x in section.theta_window_deg)
    thetas = np.linspace(window[0], window[1], section.n_theta)
    rate = section.span / section.duration

    def fidelity(theta):
        return state_prep_sweep(theta, c, section.omega_minus, rate, section.span, center=section.center_mhz,
                                theta_window=window, time_step=section.time_step,
                                ramp_fraction=section.ramp_fraction)

    fidelities = parallel_map(fidelity, thetas)
    resonances = [transition_frequency_minus(OrientationParams(theta=t), c) for t in thetas]
    table = ResultTable.from_columns("prep", {
        "theta_deg": np.degrees(thetas),
        "resonance_mhz": resonances,
        "fidelity": fidelities,
    }, summary={
        "min_fidelity": float(min(fidelities)),
        "rate_mhz_per_us": rate,
        # diabatic probability of a single avoided crossing with gap 2 Omega_-
        "landau_zener_loss": math.exp(-TWO_PI ** 2 * section.omega_minus ** 2 / rate),
    })
    return [table]


def run_validate_secular(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.validate_secular
    o = OrientationParams.from_degrees(section.theta_deg)

    def trace(b_field):
        return secular_population_trace(o, cfg.physics.model_copy(update={"B": b_field}), section.duration,
                                        section.n_points)

    traces = parallel_map(trace, section.fields_T)
    keep = np.unique(np.linspace(0, section.n_points - 1, section.output_points).round().astype(int))
    columns = {"time_us": traces[0][0][keep]}
    summary = {}
    for b_field, (_, population) in zip(section.fields_T, traces):
        columns[f"population_{b_field:g}T"] = population[keep]
        summary[f"min_population_{b_field:g}T"] = float(population.min())
    return [ResultTable.from_columns("validate_secular", columns, summary=summary)]


def run_rotation(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.rotation
    angle = math.radians(section.angle_deg)
    durations = sorted(section.durations)
    margins = [rotation_adiabaticity(section.gamma_n_B, angle, t) for t in durations]
    fidelities = parallel_map(
        lambda t: rotation_following_fidelity(section.gamma_n_B, angle, t, section.n_steps), durations)
    table = ResultTable.from_columns("rotation", {
        "duration_us": durations,
        "margin": margins,
        "adiabaticity": [adiabaticity_band(m, section.threshold).value for m in margins],
        "following_fidelity": fidelities,
    }, summary={
        "duration_at_unit_margin_us": angle / (2 * TWO_PI * section.gamma_n_B),
    })
    return [table]
