"""Single runs: reference copy, optional perturbed twin, stroboscopic sampling."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from . import observables as obs
from .dynamics import DEFAULT_RENORMALIZE_EVERY, DriveParams, advance_inplace
from .fits import first_crossing, TH_LEVEL
from .lattice import InitialConditionSpec, SpinLattice, build_geometry, init_polarized, perturb_twin

log = logging.getLogger(__name__)

# how often (in samples) an early-stopping run re-checks for thermalization
_STOP_CHECK_EVERY = 25
# samples required beyond the 90% crossing before stopping; covers the
# half-width of the smoothing window
_STOP_MARGIN = 6


@dataclass(frozen=True)
class SamplingPlan:
    """Which periods are observed.

    Every period up to ``dense_until``; beyond it ``geometric_samples``
    log-spaced periods up to the end of the run, rounded to multiples of
    ``align``. The magnetization is also kept for every period in
    ``[window[0], window[1])`` for spectra.
    """

    dense_until: int = 2048
    geometric_samples: int = 2000
    align: int = 1
    window: tuple[int, int] | None = (100, 10_000)
    snapshot_times: tuple[int, ...] = ()

    def __post_init__(self):
        if self.dense_until < 0 or self.geometric_samples < 0 or self.align < 1:
            raise ValueError("invalid sampling plan")
        if self.window is not None and not 0 <= self.window[0] < self.window[1]:
            raise ValueError(f"invalid spectral window {self.window}")

    def sample_times(self, n_periods: int) -> np.ndarray:
        dense = np.arange(0, min(self.dense_until, n_periods) + 1)
        parts = [dense, [n_periods]]
        if n_periods > self.dense_until and self.geometric_samples:
            geo = np.geomspace(max(self.dense_until, 1), n_periods, self.geometric_samples)
            parts.append(np.round(geo / self.align).astype(np.int64) * self.align)
        times = np.unique(np.concatenate(parts).astype(np.int64))
        return times[(times >= 0) & (times <= n_periods)]


@dataclass
class RunState:
    """Everything needed to continue a run after period ``period``."""

    period: int
    spins: np.ndarray
    twin: np.ndarray | None
    samples: dict[str, list]
    window_m: np.ndarray | None


@dataclass
class RunResult:
    record: obs.TrajectoryRecord
    final: SpinLattice
    final_twin: SpinLattice | None
    window: tuple[int, int] | None
    window_m: np.ndarray | None
    snapshots: dict[int, tuple[SpinLattice, SpinLattice | None]] = field(default_factory=dict)
    completed_periods: int = 0
    stopped_early: bool = False

    @property
    def window_complete(self) -> bool:
        return self.window is not None and self.completed_periods >= self.window[1] - 1

    def spectrum(self, omega: float, **kwargs) -> obs.SpectralResult:
        """Spectrum over the recorded window (truncated if the run stopped early)."""
        if self.window_m is None:
            raise ValueError("run did not record a magnetization window")
        n = min(self.window_m.size, self.completed_periods - self.window[0] + 1)
        return obs.fourier_spectrum(self.window_m[: max(n, 0)], omega, **kwargs)


def _observe(samples: dict[str, list], t: int, a: SpinLattice, b: SpinLattice | None, params: DriveParams):
    samples["n"].append(t)
    samples["m"].append(obs.magnetization(a))
    samples["H1"].append(obs.energy_H1(a, params))
    samples["HT"].append(obs.energy_HT(a, params))
    if b is not None:
        samples["d"].append(obs.decorrelator(a, b))


def _record(samples: dict[str, list], params: DriveParams, twin: bool) -> obs.TrajectoryRecord:
    return obs.TrajectoryRecord(
        samples["n"], samples["m"], samples["H1"], samples["HT"],
        samples["d"] if twin else None, params.period,
    )


def initial_state(L: int, ic: InitialConditionSpec, twin: bool) -> tuple[SpinLattice, SpinLattice | None]:
    lattice = init_polarized(build_geometry(L), ic)
    return lattice, perturb_twin(lattice, ic) if twin else None


def simulate(
    L: int,
    params: DriveParams,
    ic: InitialConditionSpec,
    n_periods: int,
    plan: SamplingPlan = SamplingPlan(),
    twin: bool = True,
    stop_at_thermalization: bool = False,
    renormalize_every: int = DEFAULT_RENORMALIZE_EVERY,
    checkpoint_every: int = 0,
    on_checkpoint: Callable[[RunState], None] | None = None,
    resume: RunState | None = None,
) -> RunResult:
    """Evolve a polarized state (and its perturbed twin) for ``n_periods``.

    With ``stop_at_thermalization`` the run ends shortly after the smoothed
    decorrelator has crossed 90% of its infinite-temperature value.
    ``on_checkpoint`` receives a :class:`RunState` every ``checkpoint_every``
    periods; passing one back as ``resume`` continues the run from there.
    """
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    lattice, partner = initial_state(L, ic, twin)
    geometry = lattice.geometry
    window = plan.window
    if window is not None:
        window = (window[0], min(window[1], n_periods + 1))
        if window[0] >= window[1]:
            window = None

    if resume is None:
        t = 0
        A = np.array(lattice.spins)
        B = np.array(partner.spins) if twin else None
        samples = {"n": [], "m": [], "H1": [], "HT": [], "d": []}
        window_m = np.full(window[1] - window[0], np.nan) if window else None
        if window and window[0] == 0:
            window_m[0] = obs.magnetization(lattice)
    else:
        t = resume.period
        A = np.array(resume.spins)
        B = None if resume.twin is None else np.array(resume.twin)
        samples = {k: list(v) for k, v in resume.samples.items()}
        window_m = None if resume.window_m is None else np.array(resume.window_m)

    sample_times = plan.sample_times(n_periods)
    events = set(sample_times.tolist()) | {s for s in plan.snapshot_times if 0 <= s <= n_periods}
    if checkpoint_every > 0:
        events |= set(range(checkpoint_every, n_periods + 1, checkpoint_every))
    events = sorted(e for e in events if e > t or (e == 0 and resume is None))
    sample_set = set(sample_times.tolist())
    snapshots: dict[int, tuple[SpinLattice, SpinLattice | None]] = {}
    rec_from, rec_to = window if window else (0, 0)
    stopped = False
    n_checks = 0

    for target in events:
        steps = target - t
        advance_inplace(A, L, params, steps, t, renormalize_every, rec_from, rec_to,
                        window_m if window_m is not None else None)
        if B is not None:
            advance_inplace(B, L, params, steps, t, renormalize_every)
        t = target
        a = SpinLattice(geometry, A)
        b = SpinLattice(geometry, B) if B is not None else None
        if target in sample_set:
            _observe(samples, t, a, b, params)
        if target in plan.snapshot_times:
            snapshots[target] = (a, b)
        if checkpoint_every > 0 and on_checkpoint is not None and t > 0 and t % checkpoint_every == 0:
            on_checkpoint(RunState(t, A.copy(), None if B is None else B.copy(),
                                   {k: list(v) for k, v in samples.items()},
                                   None if window_m is None else window_m.copy()))
        if stop_at_thermalization and B is not None and target in sample_set and t > plan.dense_until:
            n_checks += 1
            if n_checks % _STOP_CHECK_EVERY == 0 and _thermalized(samples, params):
                log.info("thermalized by period %d; stopping", t)
                stopped = True
                break

    record = _record(samples, params, B is not None)
    return RunResult(
        record=record,
        final=SpinLattice(geometry, A),
        final_twin=SpinLattice(geometry, B) if B is not None else None,
        window=window,
        window_m=window_m,
        snapshots=snapshots,
        completed_periods=t,
        stopped_early=stopped,
    )


def _thermalized(samples: dict[str, list], params: DriveParams) -> bool:
    record = _record(samples, params, True)
    tau = first_crossing(record, TH_LEVEL * obs.D_INF)
    if tau is None:
        return False
    return int(np.sum(record.sample_times > tau)) >= _STOP_MARGIN
