import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prethermal import D_INF, DriveParams, InitialConditionSpec, TrajectoryRecord, crossing_times, fit_heating_exponent, fit_lyapunov
from prethermal.fits import FitRefused, first_crossing, fit_timescales, moving_median
from prethermal.simulation import SamplingPlan, simulate


def record_from_d(d, period=1.0, times=None):
    d = np.asarray(d, dtype=float)
    n = np.arange(d.size) if times is None else np.asarray(times)
    zeros = np.zeros(d.size)
    return TrajectoryRecord(n, zeros, zeros, zeros, d, period)


def test_exact_exponential_rate():
    T = 2 * np.pi / 2.86
    n = np.arange(200)
    rec = record_from_d(1e-12 * np.exp(0.3 * n * T), period=T)
    lam, diag = fit_lyapunov(rec)
    assert lam == pytest.approx(0.3, abs=1e-10)
    assert diag["r2"] == pytest.approx(1.0, abs=1e-12)
    # fit stops below 1% of the saturation value
    assert 1e-12 * np.exp(0.3 * diag["t_end"]) <= 0.01 * D_INF


def test_saturated_series_refused():
    with pytest.raises(FitRefused):
        fit_lyapunov(record_from_d(np.full(100, D_INF)))


def test_short_growth_window_refused():
    d = 1e-3 * np.exp(0.5 * np.arange(100))
    with pytest.raises(FitRefused):
        fit_lyapunov(record_from_d(d))


def test_lyapunov_needs_positive_start_and_decorrelator():
    with pytest.raises(ValueError):
        fit_lyapunov(record_from_d(np.zeros(50)))
    n = np.arange(5)
    with pytest.raises(ValueError):
        fit_lyapunov(TrajectoryRecord(n, n * 0.0, n * 0.0, n * 0.0))


def test_moving_median_behaviour():
    x = np.array([0, 0, 0, 0, 0, 9, 0, 0, 0, 0, 0, 0, 0], dtype=float)
    assert np.all(moving_median(x, 11) == 0)
    assert np.array_equal(moving_median(np.arange(5.0), 3), [0.5, 1, 2, 3, 3.5])


def test_step_series_crossings():
    d = np.where(np.arange(300) < 100, 0.0, D_INF)
    assert crossing_times(record_from_d(d)) == (100, 100)


def test_exponential_crossings_closed_form():
    lam = 0.05
    n = np.arange(2000)
    d = np.minimum(1e-6 * np.exp(lam * n), D_INF)
    tau_pth, tau_th = crossing_times(record_from_d(d))
    assert abs((tau_th - tau_pth) - math.log(9) / lam) <= 1


def test_absent_crossings():
    tau_pth, tau_th = crossing_times(record_from_d(np.full(100, 0.5)))
    assert tau_pth == 0 and tau_th is None
    assert crossing_times(record_from_d(np.full(100, 1e-3))) == (None, None)


def test_crossings_reported_in_sample_periods():
    times = np.array([0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000])
    d = np.where(times >= 100, 1.3, 1e-3)
    tau_pth, tau_th = crossing_times(record_from_d(d, times=times))
    assert tau_pth == tau_th
    assert tau_pth in times


@given(st.lists(st.floats(0, 2), min_size=1, max_size=80), st.floats(0, 2), st.floats(0, 2))
def test_crossing_monotone_in_threshold(values, a, b):
    lo, hi = sorted((a, b))
    rec = record_from_d(values)
    t_lo, t_hi = first_crossing(rec, lo), first_crossing(rec, hi)
    if t_hi is not None:
        assert t_lo is not None and t_lo <= t_hi


def test_heating_exponent_exact():
    w = np.array([2.5, 2.8, 3.1, 3.4])
    c, diag = fit_heating_exponent(zip(w, np.exp(2 * w)))
    assert c == pytest.approx(2.0, abs=1e-12)
    assert diag["r2"] == pytest.approx(1.0)


def test_heating_exponent_drops_absent_points():
    pts = [(2.5, math.exp(5)), (2.8, None), (3.1, math.exp(6.2)), (3.4, math.exp(6.8)), (3.7, float("nan"))]
    c, diag = fit_heating_exponent(pts)
    assert c == pytest.approx(2.0, abs=1e-12)
    assert diag["n_points"] == 3
    with pytest.raises(FitRefused):
        fit_heating_exponent(pts[:3])


def test_fit_timescales_bundles_results():
    lam, T = 0.02, 2.0
    n = np.arange(3000)
    d = np.minimum(1e-10 * np.exp(lam * n * T), D_INF)
    fit = fit_timescales(record_from_d(d, period=T))
    assert fit.lyapunov == pytest.approx(lam, rel=1e-9)
    assert fit.tau_pth <= fit.tau_th
    assert fit.heating_exponent is None
    assert "smoothing" in fit.diagnostics


def test_fit_timescales_records_refusal():
    fit = fit_timescales(record_from_d(np.full(50, D_INF)))
    assert fit.lyapunov is None
    assert "refused" in fit.diagnostics["lyapunov"]
    assert fit.tau_pth == 0 and fit.tau_th == 0


def test_lyapunov_independent_of_perturbation_size():
    p = DriveParams(2.86, 0.25)
    plan = SamplingPlan(dense_until=2500, geometric_samples=0, window=None)
    rates = []
    for delta in (1e-16, 1e-12):
        res = simulate(10, p, InitialConditionSpec(0.1, delta, 5), 2500, plan)
        lam, diag = fit_lyapunov(res.record)
        assert diag["r2"] > 0.99
        rates.append(lam)
    assert rates[0] == pytest.approx(rates[1], rel=0.05)
