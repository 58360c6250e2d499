import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prethermal import (
    DriveParams,
    EnsembleSpec,
    InitialConditionSpec,
    PointSpec,
    SamplingPlan,
    SweepSpec,
    evolve,
    magnetization,
    run_ensemble,
    run_point,
    run_sweep,
    simulate,
)
from prethermal.simulation import initial_state
from prethermal.studies import EnsembleResult, Stat, realizations_for

P = DriveParams(2.86, 0.25)
IC = InitialConditionSpec(W=0.1, delta=0.01, seed=3)


def small_point(**kw):
    base = PointSpec(4, DriveParams(1.5, 0.25), IC, 3000, SamplingPlan(dense_until=200, geometric_samples=100, window=(10, 500)))
    return base.with_values(**kw)


# sampling


def test_sample_times_dense_then_geometric():
    plan = SamplingPlan(dense_until=100, geometric_samples=50, align=4)
    t = plan.sample_times(100_000)
    assert t[0] == 0 and t[-1] == 100_000
    assert np.array_equal(t[:101], np.arange(101))
    late = t[t > 100]
    assert np.all(late[:-1] % 4 == 0)
    assert np.all(np.diff(t) > 0)
    assert len(late) <= 51


def test_sample_times_short_run():
    assert list(SamplingPlan(dense_until=10).sample_times(5)) == [0, 1, 2, 3, 4, 5]


@pytest.mark.parametrize("kw", [{"align": 0}, {"dense_until": -1}, {"window": (5, 5)}])
def test_bad_plans(kw):
    with pytest.raises(ValueError):
        SamplingPlan(**kw)


# single runs


def test_simulate_matches_direct_evolution():
    plan = SamplingPlan(dense_until=50, geometric_samples=0, window=(10, 40))
    res = simulate(5, P, IC, 50, plan)
    ref, twin = initial_state(5, IC, True)
    assert np.array_equal(res.final.spins, evolve(ref, P, 50).spins)
    assert np.array_equal(res.final_twin.spins, evolve(twin, P, 50).spins)
    rec = res.record
    assert list(rec.sample_times) == list(range(51))
    assert rec.m[0] == magnetization(ref)
    assert np.allclose(res.window_m, rec.m[10:40], atol=1e-15)
    assert rec.d[0] > 0
    assert rec.period == pytest.approx(P.period)


def test_window_clipped_to_run_length():
    res = simulate(4, P, IC, 60, SamplingPlan(dense_until=60, window=(20, 1000)))
    assert res.window == (20, 61)
    assert res.window_m.size == 41
    assert res.window_complete
    assert res.spectrum(P.omega).M == 41


def test_single_copy_run_has_no_decorrelator():
    res = simulate(4, P, IC, 20, SamplingPlan(dense_until=20), twin=False)
    assert res.record.d is None and res.final_twin is None


def test_snapshots_taken():
    res = simulate(4, P, IC, 30, SamplingPlan(dense_until=5, snapshot_times=(0, 17, 30)))
    assert sorted(res.snapshots) == [0, 17, 30]
    assert np.array_equal(res.snapshots[17][0].spins, evolve(initial_state(4, IC, False)[0], P, 17).spins)


def test_checkpoint_resume_is_bitwise():
    plan = SamplingPlan(dense_until=40, geometric_samples=30, window=(10, 150))
    states = []
    full = simulate(5, P, IC, 600, plan, checkpoint_every=200, on_checkpoint=states.append)
    assert [s.period for s in states] == [200, 400, 600]
    resumed = simulate(5, P, IC, 600, plan, resume=states[0])
    assert np.array_equal(full.final.spins, resumed.final.spins)
    assert np.array_equal(full.record.d, resumed.record.d)
    assert np.array_equal(full.record.sample_times, resumed.record.sample_times)
    assert np.array_equal(full.window_m, resumed.window_m)


def test_stops_after_thermalization():
    point = PointSpec(4, DriveParams(1.5, 0.25), IC, 200_000, SamplingPlan(dense_until=100, geometric_samples=2000),
                      stop_at_thermalization=True)
    res = run_point(point)
    assert res.stopped_early
    assert res.completed_periods < 200_000
    assert res.fit.tau_th is not None and res.fit.tau_th <= res.completed_periods


def test_run_point_summary():
    res = run_point(small_point())
    s = res.summary()
    assert s["samples"] == len(res.record)
    assert s["completed_periods"] == 3000
    assert res.spectrum is not None and res.fit is not None


def test_with_values_routes_fields():
    p = small_point(omega=3.0, W=0.2, L=6, n_periods=10)
    assert p.params.omega == 3.0 and p.ic.W == 0.2 and p.L == 6 and p.n_periods == 10
    assert p.params.g == 0.25 and p.ic.seed == IC.seed


# ensembles


def test_realization_counts():
    assert realizations_for(28) == 1
    assert realizations_for(14) == 8
    assert [realizations_for(L) for L in (8, 12, 16, 20)] == [43, 13, 6, 3]


def test_ensemble_spec_validation_and_seeds():
    with pytest.raises(ValueError):
        EnsembleSpec(R=0)
    spec = EnsembleSpec(R=4, base_seed=9)
    seeds = [spec.seed(r) for r in range(4)]
    assert len(set(seeds)) == 4
    assert seeds == [EnsembleSpec(R=4, base_seed=9).seed(r) for r in range(4)]
    assert seeds != [EnsembleSpec(R=4, base_seed=10).seed(r) for r in range(4)]


def test_ensemble_overrides():
    points = EnsembleSpec(R=2, overrides=({"omega": 2.0}, {})).points(small_point())
    assert points[0].params.omega == 2.0 and points[1].params.omega == 1.5


def test_single_realization_has_no_spread():
    res = run_ensemble(EnsembleSpec(R=1), small_point())
    assert res.tau_pth.std is None
    assert res.tau_pth.mean == res.realizations[0].fit.tau_pth


def test_same_base_seed_same_aggregate():
    a = run_ensemble(EnsembleSpec(R=3, base_seed=2), small_point())
    b = run_ensemble(EnsembleSpec(R=3, base_seed=2), small_point())
    assert (a.tau_pth, a.tau_th, a.lyapunov) == (b.tau_pth, b.tau_th, b.lyapunov)


def test_aggregate_invariant_under_realization_order():
    res = run_ensemble(EnsembleSpec(R=4, base_seed=5), small_point())
    flipped = EnsembleResult.aggregate(res.realizations[::-1])
    assert (flipped.tau_pth, flipped.tau_th, flipped.lyapunov) == (res.tau_pth, res.tau_th, res.lyapunov)


@given(st.lists(st.one_of(st.none(), st.floats(0, 1e6)), min_size=1, max_size=12), st.randoms())
def test_stat_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert Stat.of(values) == Stat.of(shuffled)
    s = Stat.of(values)
    assert s.n + s.n_absent == len(values)


def test_process_pool_matches_serial():
    spec = EnsembleSpec(R=2, base_seed=1)
    serial = run_ensemble(spec, small_point(n_periods=500))
    pooled = run_ensemble(spec, small_point(n_periods=500), workers=2)
    assert serial.tau_pth == pooled.tau_pth and serial.lyapunov == pooled.lyapunov


# sweeps


def test_single_point_sweep_equals_direct_run():
    point = small_point()
    ds = run_sweep(SweepSpec(point))
    (key, entry), = ds.entries.items()
    assert key == (0.25, 1.5, 4)
    direct = run_point(point)
    assert np.array_equal(entry.result.record.d, direct.record.d)
    assert entry.spectrum.detected_order == direct.spectrum.detected_order


def test_sweep_grid_and_failures_recorded():
    spec = SweepSpec(small_point(n_periods=300), g_values=(0.25, 0.5), L_values=(1, 4))
    ds = run_sweep(spec)
    assert len(ds.entries) == 4
    assert ds.entries[(0.25, 1.5, 1)].error is not None
    assert ds.entries[(0.5, 1.5, 4)].error is None
    orders = ds.orders()
    assert orders[(0.5, 1.5, 4)] == 2
    assert orders[(0.5, 1.5, 1)] is None


def test_sweep_with_ensembles():
    spec = SweepSpec(small_point(n_periods=500), L_values=(4, 5), realizations="auto")
    assert spec.n_realizations(20) == 3
    spec = SweepSpec(small_point(n_periods=500), L_values=(4,), realizations=3)
    entry = run_sweep(spec).entries[(0.25, 1.5, 4)]
    assert entry.ensemble is not None and len(entry.ensemble.realizations) == 3
