import math

import numpy as np
import pytest
from scipy.optimize import brentq

from nvhp.config.config import parse_config
from nvhp.cycles import run_cycles_single
from nvhp.experiments import buildup
from nvhp.models.models import HyperfinePair
from nvhp.runner import dispatch
from nvhp.sweep import lz_mu, lz_result


@pytest.mark.slow
def test_phase_averaged_buildup_saturates():
    cfg = parse_config("experiment: cycle\ncycle: {n_cycles: 30, n_phases: 16}\n")
    table = dispatch(cfg)[0]
    summary = table.summary["spin1"]
    assert summary["final"] > 0.9
    assert summary["first_cycle"] <= summary["p_max_analytic"] + 0.03


@pytest.mark.slow
def test_first_cycle_at_a_stokes_phase():
    cfg = parse_config("experiment: cycle\ncycle: {n_cycles: 1}\n")
    spin = cfg.cycle.spins[0]
    hf = HyperfinePair(a_x_prime=spin.a_x_prime, a_z_prime=spin.a_z_prime)

    def first_cycle(phase, n_phases=0):
        section = cfg.cycle.model_copy(update={"stokes_phase": phase, "n_phases": n_phases})
        return run_cycles_single(buildup.cycle_config(cfg, section), hf).values[1]

    phases = np.linspace(0.0, 2 * math.pi, 17)
    scan = np.array([first_cycle(p) for p in phases]) - 0.58
    assert scan.min() < 0 < scan.max()
    k = int(np.flatnonzero(np.sign(scan[:-1]) != np.sign(scan[1:]))[0])
    root = brentq(lambda p: first_cycle(p) - 0.58, phases[k], phases[k + 1], xtol=1e-4)
    assert first_cycle(root) == pytest.approx(0.58, abs=0.01)

    p_max = lz_result(lz_mu(cfg.cycle.omega_eff, spin.a_x_prime, cfg.cycle.rate_v, cfg.physics.gamma_n_B)).p_max
    assert first_cycle(0.0, n_phases=16) < 0.58 < p_max


@pytest.mark.slow
def test_default_prep_window():
    table = dispatch(parse_config("experiment: prep\n"))[0]
    assert table.frame["fidelity"].min() > 0.99
    assert math.isclose(table.frame["theta_deg"].iloc[-1], 20.0)


@pytest.mark.slow
def test_pmax_surface_reference_point():
    table = dispatch(parse_config("experiment: pmax-surface\npmax_surface: {a_min: 0.18, a_max: 0.9, n_a: 5, "
                                  "v_min: 6.0, v_max: 7.0, n_v: 2}\n"))[0]
    row = table.frame[(table.frame["v_mhz_per_us"] == 6.0) & (table.frame["a_x_mhz"].round(2) == 0.9)]
    expected = lz_result(lz_mu(3.6, 0.9, 6.0, 10.705 * 0.36)).p_max
    assert row["p_max"].iloc[0] == pytest.approx(expected)
    assert expected == pytest.approx(0.631, abs=0.002)
    weakest = table.frame[(table.frame["v_mhz_per_us"] == 6.0) & (table.frame["a_x_mhz"].round(2) == 0.18)]
    assert weakest["p_max"].iloc[0] == pytest.approx(0.236, abs=0.002)


@pytest.mark.slow
def test_default_multispin_dipolar_effect_is_small():
    summary = dispatch(parse_config("experiment: multispin\n"))[0].summary
    assert summary["n_spins"] == 5
    assert summary["max_abs_difference"] < 0.02
    assert summary["final_aggregate"] > 0


@pytest.mark.slow
def test_default_ensemble_buildup():
    summary = dispatch(parse_config("experiment: ensemble\n"))[0].summary
    assert 0.1 <= summary["final_polarization"] <= 0.3
    assert summary["r_squared"] > 0.95
