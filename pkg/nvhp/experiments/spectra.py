"""
Closed-form and spectral experiments: dressed level diagrams and the
Landau-Zener transfer surface.
"""

from typing import List

import numpy as np

from nvhp.dressed import hartmann_hahn_detunings, level_diagram
from nvhp.models.models import DressedParams, HyperfinePair, RunConfig
from nvhp.result_writers import ResultTable
from nvhp.sweep import adiabaticity_band, adiabaticity_margin_far, lz_surface


def run_levels(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.levels
    gamma_n_B = section.gamma_n_B or cfg.physics.gamma_n_B
    dp = DressedParams(omega_eff=section.omega_eff, gamma_n_B=gamma_n_B, branch=section.branch)
    hf = HyperfinePair(a_x_prime=section.a_x_prime, a_z_prime=section.a_z_prime)
    table = level_diagram(np.linspace(section.delta_min, section.delta_max, section.n_points), dp, hf)
    if gamma_n_B >= section.omega_eff:
        lo, hi = hartmann_hahn_detunings(gamma_n_B, section.omega_eff)
        table.summary.update({"hartmann_hahn_lo_mhz": lo, "hartmann_hahn_hi_mhz": hi})
    return [table]


def run_pmax_surface(cfg: RunConfig) -> List[ResultTable]:
    section = cfg.pmax_surface
    gamma_n_B = section.gamma_n_B or cfg.physics.gamma_n_B
    a_values = np.linspace(section.a_min, section.a_max, section.n_a)
    v_values = np.linspace(section.v_min, section.v_max, section.n_v)
    table = lz_surface(section.omega_eff, gamma_n_B, a_values, v_values)

    margins = [adiabaticity_margin_far(section.omega_eff, v) for v in table.frame["v_mhz_per_us"]]
    table.frame["margin_far"] = margins
    table.frame["adiabaticity"] = [adiabaticity_band(m).value for m in margins]

    best = table.frame["p_max"].idxmax()
    table.summary.update({
        "omega_eff_mhz": section.omega_eff,
        "gamma_n_B_mhz": gamma_n_B,
        "p_max_peak": float(table.frame.loc[best, "p_max"]),
        "a_x_at_peak_mhz": float(table.frame.loc[best, "a_x_mhz"]),
        "v_at_peak_mhz_per_us": float(table.frame.loc[best, "v_mhz_per_us"]),
    })
    return [table]
