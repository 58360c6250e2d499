"""Lyapunov, crossing-time and heating-exponent fits on recorded series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .observables import D_INF, TrajectoryRecord

SMOOTHING_WIDTH = 11
LYAPUNOV_SKIP = 5
LYAPUNOV_UPPER = 0.01
LYAPUNOV_MIN_SAMPLES = 10
PTH_LEVEL = 0.1
TH_LEVEL = 0.9


class FitRefused(ValueError):
    """Not enough usable data for the requested fit."""


@dataclass
class TimescaleFit:
    """Timescales of one twin run; ``tau_*`` are in periods, ``lyapunov`` in 1/time.

    ``None`` marks a quantity the run could not provide (no crossing within
    the run, or a refused fit).
    """

    lyapunov: float | None
    tau_pth: int | None
    tau_th: int | None
    heating_exponent: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def fit_lyapunov(
    record: TrajectoryRecord,
    d_inf: float = D_INF,
    skip: int = LYAPUNOV_SKIP,
    upper: float = LYAPUNOV_UPPER,
    min_samples: int = LYAPUNOV_MIN_SAMPLES,
) -> tuple[float, dict]:
    """Growth rate of ``d ~ exp(lambda t)`` before saturation.

    Fits ``ln d`` against ``t`` over samples ``skip ..`` up to (excluding) the
    first sample where ``d > upper * d_inf``.
    """
    d = record.d
    if d is None:
        raise ValueError("record has no decorrelator series")
    if d.size == 0 or not d[0] > 0:
        raise ValueError("decorrelator must start positive (twin perturbation of zero size?)")
    above = np.flatnonzero(d > upper * d_inf)
    end = int(above[0]) if above.size else d.size
    window = slice(skip, end)
    t = record.times[window]
    y = d[window]
    if y.size < min_samples:
        raise FitRefused(f"growth window has {y.size} samples, need {min_samples}")
    if np.any(y <= 0):
        raise FitRefused("decorrelator vanishes inside the growth window")
    slope, intercept, r2 = _linear_fit(t, np.log(y))
    return slope, {"r2": r2, "intercept": intercept, "n_samples": int(y.size),
                   "t_start": float(t[0]), "t_end": float(t[-1])}


def moving_median(x: np.ndarray, width: int = SMOOTHING_WIDTH) -> np.ndarray:
    """Centred running median; the window is truncated at the ends."""
    x = np.asarray(x, dtype=np.float64)
    half = width // 2
    n = x.size
    out = np.empty(n)
    if n >= width:
        out[half : n - half] = np.median(np.lib.stride_tricks.sliding_window_view(x, width), axis=1)
        edges = list(range(half)) + list(range(n - half, n))
    else:
        edges = range(n)
    for i in edges:
        out[i] = np.median(x[max(0, i - half) : i + half + 1])
    return out


def first_crossing(record: TrajectoryRecord, level: float, width: int = SMOOTHING_WIDTH) -> int | None:
    """First sampled period at which the smoothed ``d`` exceeds ``level``."""
    if record.d is None:
        raise ValueError("record has no decorrelator series")
    smooth = moving_median(record.d, width)
    idx = np.flatnonzero(smooth > level)
    return int(record.sample_times[idx[0]]) if idx.size else None


def crossing_times(
    record: TrajectoryRecord, d_inf: float = D_INF, width: int = SMOOTHING_WIDTH
) -> tuple[int | None, int | None]:
    """``(tau_pth, tau_th)``: first passages of the smoothed ``d`` over 10% and 90% of ``d_inf``."""
    return (
        first_crossing(record, PTH_LEVEL * d_inf, width),
        first_crossing(record, TH_LEVEL * d_inf, width),
    )


def fit_heating_exponent(points) -> tuple[float, dict]:
    """Slope ``c`` of ``ln tau_th`` against ``omega``.

    ``points`` is an iterable of ``(omega, tau_th)``; pairs whose ``tau_th`` is
    missing or not a positive finite number are dropped before the count check.
    """
    usable = [(float(w), float(t)) for w, t in points if t is not None and math.isfinite(t) and t > 0]
    if len(usable) < 3:
        raise FitRefused(f"need at least 3 finite thermalization times, got {len(usable)}")
    w, tau = np.array(usable).T
    slope, intercept, r2 = _linear_fit(w, np.log(tau))
    return slope, {"r2": r2, "intercept": intercept, "n_points": len(usable)}


def fit_timescales(record: TrajectoryRecord, d_inf: float = D_INF) -> TimescaleFit:
    tau_pth, tau_th = crossing_times(record, d_inf)
    diagnostics = {"smoothing": f"centred moving median, {SMOOTHING_WIDTH} samples"}
    try:
        lyap, lyap_diag = fit_lyapunov(record, d_inf)
        diagnostics["lyapunov"] = lyap_diag
    except (FitRefused, ValueError) as exc:
        lyap = None
        diagnostics["lyapunov"] = {"refused": str(exc)}
    return TimescaleFit(lyap, tau_pth, tau_th, None, diagnostics)
