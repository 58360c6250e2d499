"""Ensembles of realizations and parameter sweeps."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import DEFAULT_RENORMALIZE_EVERY, DriveParams
from .fits import TimescaleFit, fit_timescales
from .lattice import InitialConditionSpec
from .observables import DEFAULT_ORDERS, SpectralResult, TrajectoryRecord
from .simulation import SamplingPlan, simulate

log = logging.getLogger(__name__)

REFERENCE_SPINS = 28**3


@dataclass(frozen=True)
class PointSpec:
    """One simulation: lattice size, drive, initial state, length and sampling."""

    L: int
    params: DriveParams
    ic: InitialConditionSpec
    n_periods: int
    plan: SamplingPlan = SamplingPlan()
    twin: bool = True
    stop_at_thermalization: bool = False
    renormalize_every: int = DEFAULT_RENORMALIZE_EVERY
    candidates: tuple = DEFAULT_ORDERS

    def with_values(self, **kw) -> PointSpec:
        """Copy with any of ``L, omega, g, h, W, delta, seed, n_periods`` replaced."""
        params = {k: kw.pop(k) for k in ("omega", "g", "h") if k in kw}
        ic = {k: kw.pop(k) for k in ("W", "delta", "seed") if k in kw}
        out = replace(self, **kw)
        if params:
            out = replace(out, params=replace(out.params, **params))
        if ic:
            out = replace(out, ic=replace(out.ic, **ic))
        return out


@dataclass
class PointResult:
    point: PointSpec
    record: TrajectoryRecord
    spectrum: SpectralResult | None
    fit: TimescaleFit | None
    completed_periods: int
    stopped_early: bool
    window_m: np.ndarray | None = field(default=None, repr=False)

    def summary(self) -> dict:
        rec = self.record
        out = {
            "samples": len(rec),
            "completed_periods": self.completed_periods,
            "stopped_early": self.stopped_early,
            "m_final": float(rec.m[-1]),
            "HT_initial": float(rec.HT[0]),
            "HT_final": float(rec.HT[-1]),
        }
        if rec.d is not None:
            out["d_final"] = float(rec.d[-1])
        return out


def run_point(point: PointSpec) -> PointResult:
    res = simulate(
        point.L, point.params, point.ic, point.n_periods, point.plan, point.twin,
        point.stop_at_thermalization, point.renormalize_every,
    )
    spectrum = None
    if res.window_m is not None and min(res.window_m.size, res.completed_periods - res.window[0] + 1) >= 16:
        spectrum = res.spectrum(point.params.omega, candidates=point.candidates)
    fit = fit_timescales(res.record) if point.twin else None
    return PointResult(point, res.record, spectrum, fit, res.completed_periods, res.stopped_early, res.window_m)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [_capture(fn, it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_capture, [fn] * len(items), items))


def _capture(fn, item):
    try:
        return fn(item)
    except Exception as exc:  # recorded per point; a sweep keeps going
        log.warning("point failed: %s", exc)
        return exc


@dataclass(frozen=True)
class EnsembleSpec:
    """``R`` independent initial conditions derived from ``base_seed``.

    ``overrides[r]`` (optional) holds per-realization replacements accepted by
    :meth:`PointSpec.with_values`.
    """

    R: int = 1
    base_seed: int = 0
    overrides: tuple[dict, ...] = ()

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")

    def seed(self, r: int) -> int:
        return int(np.random.SeedSequence([self.base_seed, r]).generate_state(1, np.uint64)[0])

    def points(self, point: PointSpec) -> list[PointSpec]:
        out = []
        for r in range(self.R):
            extra = self.overrides[r] if r < len(self.overrides) else {}
            out.append(point.with_values(seed=self.seed(r), **extra))
        return out


def realizations_for(L: int, reference_spins: int = REFERENCE_SPINS) -> int:
    """``ceil(28**3 / L**3)``: equal total spin budget across sizes."""
    return max(1, math.ceil(reference_spins / L**3))


@dataclass
class Stat:
    mean: float | None
    std: float | None
    n: int
    n_absent: int

    @classmethod
    def of(cls, values) -> Stat:
        present = sorted(float(v) for v in values if v is not None and math.isfinite(v))
        absent = len(values) - len(present)
        if not present:
            return cls(None, None, 0, absent)
        arr = np.array(present)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else None
        return cls(float(np.mean(arr)), std, int(arr.size), absent)


@dataclass
class EnsembleResult:
    tau_pth: Stat
    tau_th: Stat
    lyapunov: Stat
    realizations: list = field(repr=False)

    @classmethod
    def aggregate(cls, results: list) -> EnsembleResult:
        fits = [r.fit for r in results if isinstance(r, PointResult) and r.fit is not None]
        failed = len(results) - len(fits)
        pad = [None] * failed
        return cls(
            Stat.of([f.tau_pth for f in fits] + pad),
            Stat.of([f.tau_th for f in fits] + pad),
            Stat.of([f.lyapunov for f in fits] + pad),
            results,
        )


def run_ensemble(spec: EnsembleSpec, point: PointSpec, workers: int = 1) -> EnsembleResult:
    """Mean and spread of the timescales over ``spec.R`` realizations."""
    return EnsembleResult.aggregate(_map(run_point, spec.points(point), workers))


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian grid over ``g``, ``omega`` and ``L`` around a baseline point.

    An empty axis keeps the baseline value. ``realizations`` is an integer or
    ``"auto"`` (``ceil(28**3 / N)`` per size); above one, each grid point is an
    ensemble seeded from the baseline seed.
    """

    base: PointSpec
    g_values: tuple = ()
    omega_values: tuple = ()
    L_values: tuple = ()
    realizations: int | str = 1

    def grid(self) -> list[tuple]:
        gs = self.g_values or (self.base.params.g,)
        ws = self.omega_values or (self.base.params.omega,)
        Ls = self.L_values or (self.base.L,)
        if not (gs and ws and Ls):
            raise ValueError("empty sweep grid")
        return [(g, w, L) for L in Ls for w in ws for g in gs]

    def n_realizations(self, L: int) -> int:
        if self.realizations == "auto":
            return realizations_for(L)
        return int(self.realizations)


@dataclass
class SweepEntry:
    coords: tuple
    point: PointSpec
    result: PointResult | None = None
    ensemble: EnsembleResult | None = None
    error: str | None = None

    @property
    def spectrum(self) -> SpectralResult | None:
        return self.result.spectrum if self.result else None

    @property
    def fit(self) -> TimescaleFit | None:
        return self.result.fit if self.result else None


@dataclass
class SweepDataset:
    spec: SweepSpec
    entries: dict = field(default_factory=dict)

    def orders(self) -> dict:
        """``coords -> detected DTC order`` (``None`` when no peak)."""
        return {k: (e.spectrum.detected_order if e.spectrum else None) for k, e in self.entries.items()}


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepDataset:
    """Run every grid point; failures are stored on their entry, not raised."""
    tasks, owners = [], []
    entries = {}
    for g, w, L in spec.grid():
        key = (g, w, L)
        try:
            point = spec.base.with_values(g=g, omega=w, L=L)
        except ValueError as exc:
            entries[key] = SweepEntry(key, spec.base, error=str(exc))
            continue
        entries[key] = SweepEntry(key, point)
        R = spec.n_realizations(L)
        points = [point] if R == 1 else EnsembleSpec(R, spec.base.ic.seed).points(point)
        for p in points:
            tasks.append(p)
            owners.append(key)
    results = _map(run_point, tasks, workers)
    grouped: dict = {}
    for key, res in zip(owners, results):
        grouped.setdefault(key, []).append(res)
    for key, group in grouped.items():
        entry = entries[key]
        errors = [str(r) for r in group if isinstance(r, Exception)]
        ok = [r for r in group if isinstance(r, PointResult)]
        if errors:
            entry.error = "; ".join(errors)
        if ok:
            entry.result = ok[0]
        if len(group) > 1:
            entry.ensemble = EnsembleResult.aggregate(group)
    return SweepDataset(spec, entries)
