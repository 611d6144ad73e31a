import math

import numpy as np
import pytest

from nvhp.ensemble import (DiffusionKernel, EnsembleState, brownian_schedule, buildup_fit,
                           classical_nv_populations, diffusion_step, dnp_step, estimate_totals,
                           flip_flop_rates, generate_lattice, in_active_window, lattice_sites, rng_for,
                           run_ensemble, transfer_probabilities)
from nvhp.errors import NoResonanceError
from nvhp.experiments.ensemble_runs import lattice_for_run
from nvhp.models.models import (ActiveWindowEnum, DiffusionConfig, EnsembleSweepParams, HyperfinePair,
                                LatticeConfig, NuclearSpinRecord)


def spin(label, position, a_z=0.0, a_x=0.3):
    return NuclearSpinRecord(label=label, hyperfine=HyperfinePair(a_x_prime=a_x, a_z_prime=a_z),
                             position=position)


@pytest.fixture
def cluster():
    return [spin("a", (0.0, 0.0, 1.0)), spin("b", (0.25, 0.0, 1.0)), spin("c", (0.0, 0.3, 1.1)),
            spin("d", (0.2, 0.2, 1.3))]


def test_rng_streams():
    assert rng_for(7, "lattice").random() == rng_for(7, "lattice").random()
    assert rng_for(7, "lattice").random() != rng_for(7, "brownian").random()
    assert rng_for(7, "lattice").random() != rng_for(8, "lattice").random()


def test_lattice_sites_geometry():
    sites = lattice_sites(LatticeConfig(n_sites=1000))
    r = np.linalg.norm(sites, axis=1)
    assert len(sites) == 1000
    assert r.min() == pytest.approx(0.357 * math.sqrt(3) / 4, abs=1e-9)
    # the [111] neighbour lands on the field axis
    on_axis = sites[np.isclose(r, r.min())]
    assert np.any(np.hypot(on_axis[:, 0], on_axis[:, 1]) < 1e-9)


def test_generate_lattice_seeding(constants):
    full = generate_lattice(LatticeConfig(n_sites=200, abundance=1.0), constants)
    assert len(full) == 200
    cfg = LatticeConfig(n_sites=2000, abundance=0.1, seed=3)
    first = [s.label for s in generate_lattice(cfg, constants)]
    again = [s.label for s in generate_lattice(cfg, constants)]
    other = [s.label for s in generate_lattice(cfg.model_copy(update={"seed": 4}), constants)]
    assert first == again
    assert first != other
    assert 100 < len(first) < 300


def test_lattice_seed_overrides_run_seed(constants):
    fixed = LatticeConfig(n_sites=2000, abundance=0.1, seed=1)
    assert lattice_for_run(fixed, 9).seed == 1
    assert lattice_for_run(LatticeConfig(n_sites=2000, abundance=0.1), 9).seed == 9
    labels = [[s.label for s in generate_lattice(lattice_for_run(cfg, 0), constants)]
              for cfg in (fixed, fixed.model_copy(update={"seed": 2}))]
    assert labels[0] != labels[1]
    same_run = [[s.label for s in generate_lattice(lattice_for_run(fixed, run_seed), constants)]
                for run_seed in (0, 5)]
    assert same_run[0] == same_run[1]


def test_classical_populations():
    assert classical_nv_populations(0.0) == pytest.approx((1.0, 0.0, 0.0))
    assert sum(classical_nv_populations(1.1)) == pytest.approx(1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        EnsembleState(p=np.array([1.5]))
    with pytest.raises(ValueError):
        EnsembleState(p=np.zeros(2), nv_state=2)


def test_dnp_step():
    state = EnsembleState(p=np.zeros(2))
    p_avg = np.array([0.5, 0.0])
    state = dnp_step(dnp_step(state, p_avg), p_avg)
    assert state.p == pytest.approx(np.array([0.75, 0.0]))
    assert dnp_step(state, p_avg, eta=0.0).p == pytest.approx(state.p)


def test_transfer_probabilities(cluster):
    sweep = EnsembleSweepParams()
    p_avg = transfer_probabilities(cluster, sweep, 3.8538)
    assert np.all((p_avg >= 0) & (p_avg <= 0.5))
    with pytest.raises(NoResonanceError):
        transfer_probabilities(cluster, sweep, 2.0)


def test_active_window():
    small = EnsembleSweepParams()
    assert in_active_window(math.radians(10), small)
    assert in_active_window(math.radians(170), small)
    assert not in_active_window(math.radians(90), small)
    large = EnsembleSweepParams(active_window=ActiveWindowEnum.LARGE_ANGLE)
    assert in_active_window(math.radians(90), large)
    assert not in_active_window(math.radians(10), large)


def test_flip_flop_rates_symmetric(cluster):
    positions = np.array([s.position for s in cluster])
    w = flip_flop_rates(positions, 10.705)
    assert np.allclose(w, w.T)
    assert np.all(np.diag(w) == 0)
    assert np.all(w >= 0)
    assert flip_flop_rates(positions[:1], 10.705).shape == (1, 1)


def test_diffusion_conserves_total(cluster):
    kernel = DiffusionKernel.from_spins(cluster, DiffusionConfig(time_step=20.0))
    state = EnsembleState(p=np.array([1.0, 0.0, 0.0, 0.0]))
    out = diffusion_step(state, kernel, 1.0e4)
    assert math.fsum(out.p) == pytest.approx(1.0, abs=1e-12)
    assert out.time == pytest.approx(1.0e4)
    assert out.p[0] < 1.0


def test_frozen_core_blocks_diffusion():
    spins = [spin("a", (0.0, 0.0, 1.0), a_z=0.1), spin("b", (0.25, 0.0, 1.0), a_z=0.5)]
    kernel = DiffusionKernel.from_spins(spins, DiffusionConfig())
    state = EnsembleState(p=np.array([1.0, 0.0]), nv_state=-1)
    assert diffusion_step(state, kernel, 1.0e5).p == pytest.approx(np.array([1.0, 0.0]))
    ungated = diffusion_step(EnsembleState(p=np.array([1.0, 0.0]), nv_state=0), kernel, 1.0e5)
    assert ungated.p[1] > 0


def test_brownian_schedule():
    windows = brownian_schedule(205.0, 1000.0, seed=1)
    assert len(windows) == 5
    assert sum(dwell for _, _, dwell in windows) == pytest.approx(1000.0)
    assert windows == brownian_schedule(205.0, 1000.0, seed=1)


def test_run_ensemble_builds_up_when_always_active(cluster):
    sweep = EnsembleSweepParams(sweep_duration=70.0)
    schedule = [(0.0, 0.0, 700.0)] * 5
    table = run_ensemble(cluster, DiffusionConfig(), sweep, 3500.0, 700.0, schedule=schedule)
    p = table.frame["polarization"].to_numpy()
    assert p[0] == 0.0
    assert np.all(np.diff(p) > 0)
    assert table.summary["active_fraction"] == 1.0
    assert list(table.frame.columns) == ["time_us", "polarization", "active", "nv_state", "theta_deg"]


def test_run_ensemble_inactive_stays_unpolarized(cluster):
    schedule = [(math.pi / 2, 0.0, 205.0)] * 4
    table = run_ensemble(cluster, DiffusionConfig(), EnsembleSweepParams(), 820.0, 205.0, schedule=schedule)
    assert np.allclose(table.frame["polarization"], 0.0)
    assert table.summary["n_active_windows"] == 0


def test_run_ensemble_is_reproducible(cluster):
    args = (cluster, DiffusionConfig(), EnsembleSweepParams(), 5000.0, 205.0)
    first = run_ensemble(*args, seed=11).frame
    second = run_ensemble(*args, seed=11).frame
    assert first.equals(second)


def test_buildup_fit_linear():
    t = np.linspace(0, 2e6, 50)
    fit = buildup_fit(t, 0.05 * t * 1e-6)
    assert fit["slope_per_s"] == pytest.approx(0.05)
    assert fit["r_squared"] == pytest.approx(1.0)
    assert buildup_fit([0, 1, 2], [0, 0, 0]) == {"slope_per_s": 0.0, "r_squared": 0.0}


def test_totals():
    record = estimate_totals(1.0, 85.0, 2e18, 0.011)
    assert record.nv_per_nd == pytest.approx(643, abs=2)
    assert record.total_c13 == pytest.approx(1.936e18, rel=1e-3)
    assert record.polarized_c13 == pytest.approx(0.2 * record.total_c13)
    assert record.sweeps_per_window == 20
    assert record.n_nanodiamonds * record.nd_volume_cm3 == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        estimate_totals(0.0, 85.0, 2e18, 0.011)
