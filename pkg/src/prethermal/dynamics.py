"""Exact one-period map of the binary drive and a continuous-time oracle.

During the first half period each spin precesses about z at the rate
``kappa_r = h + mean(Sz over the 6 neighbours)``; since every Sz is conserved
there, kappa is constant and the precession is an exact rotation by
``kappa_r * T / 2``. The second half is a uniform rotation about x by
``2 pi g``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .lattice import SpinLattice

DEFAULT_RENORMALIZE_EVERY = 1000


@dataclass(frozen=True)
class DriveParams:
    """Drive frequency ``omega``, kick ``g`` (x rotation of ``2 pi g``), field ``h``.

    ``g`` may be a :class:`~fractions.Fraction`; rotations by multiples of a
    quarter turn are then exact.
    """

    omega: float
    g: float | Fraction
    h: float = 0.1

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be finite and > 0, got {self.omega!r}")
        if not math.isfinite(float(self.g)) or not math.isfinite(self.h):
            raise ValueError("g and h must be finite")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def half_period(self) -> float:
        return math.pi / self.omega

    def kick(self) -> tuple[float, float]:
        """``(cos 2 pi g, sin 2 pi g)``."""
        return cos_sin_turns(self.g)


def cos_sin_turns(turns: float | Fraction) -> tuple[float, float]:
    """``(cos, sin)`` of ``2 pi * turns``, exact at multiples of a quarter turn."""
    if isinstance(turns, Fraction):
        f = turns % 1
        q = round(4 * f)
        r = float(f - Fraction(q, 4))
    else:
        f = math.fmod(float(turns), 1.0)
        q = round(4.0 * f)
        r = f - q / 4.0
    angle = 2.0 * math.pi * r
    c, s = math.cos(angle), math.sin(angle)
    for _ in range(q % 4):
        c, s = -s, c
    return c + 0.0, s + 0.0


def effective_field(lattice: SpinLattice, h: float) -> np.ndarray:
    """``kappa_r`` for every site."""
    sz = lattice.sz
    nbr = lattice.geometry.neighbors
    acc = sz[nbr[:, 0]] + sz[nbr[:, 1]] + sz[nbr[:, 2]] + sz[nbr[:, 3]] + sz[nbr[:, 4]] + sz[nbr[:, 5]]
    return h + acc / 6.0


def local_field(lattice: SpinLattice, site: int, h: float) -> float:
    if not 0 <= site < lattice.N:
        raise IndexError(f"site {site} outside lattice of {lattice.N} sites")
    nbr = lattice.geometry.neighbors[site]
    return h + float(sum(lattice.sz[j] for j in nbr)) / 6.0


def floquet_step(lattice: SpinLattice, params: DriveParams) -> SpinLattice:
    """One full period, all sites updated from the pre-step state."""
    c2, s2 = params.kick()
    out = np.empty_like(lattice.spins)
    krow = np.empty(lattice.L)
    _kernels.step(lattice.spins, out, lattice.L, params.h, params.half_period, c2, s2, krow)
    return lattice.with_spins(out)


def floquet_step_ordered(lattice: SpinLattice, params: DriveParams, order: Iterable[int] | None = None) -> SpinLattice:
    """:func:`floquet_step` through the neighbour table, visiting sites in ``order``.

    Exists to check that the update is genuinely synchronous: any visiting
    order must give a bitwise-identical result.
    """
    c2, s2 = params.kick()
    order = np.arange(lattice.N) if order is None else np.asarray(order, dtype=np.int64)
    if np.sort(order).tolist() != list(range(lattice.N)):
        raise ValueError("order must be a permutation of the site indices")
    out = np.empty_like(lattice.spins)
    _kernels.step_sites(lattice.spins, out, lattice.geometry.neighbors, order, params.h, params.half_period, c2, s2)
    return lattice.with_spins(out)


def z_rotation_stage(lattice: SpinLattice, params: DriveParams) -> SpinLattice:
    """First half period only (precession about z by ``kappa_r T / 2``)."""
    angle = effective_field(lattice, params.h) * params.half_period
    c1, s1 = np.cos(angle), np.sin(angle)
    sx, sy, sz = lattice.spins
    return lattice.with_spins(np.stack([c1 * sx - s1 * sy, s1 * sx + c1 * sy, sz.copy()]))


def advance_inplace(
    spins: np.ndarray,
    L: int,
    params: DriveParams,
    n_periods: int,
    start_period: int = 0,
    renormalize_every: int = DEFAULT_RENORMALIZE_EVERY,
    record_from: int = 0,
    record_to: int = 0,
    m_out: np.ndarray | None = None,
) -> None:
    """Low-level driver: evolve a writable ``(3, N)`` array in place.

    ``start_period`` is the global index of the input state; it fixes the
    renormalization cadence, and the magnetization after each period ``t``
    with ``record_from <= t < record_to`` is written to ``m_out[t - record_from]``.
    """
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    if n_periods == 0:
        return
    c2, s2 = params.kick()
    if m_out is None:
        m_out = np.empty(0)
        record_from = record_to = 0
    _kernels.advance(
        spins, L, int(n_periods), int(start_period), params.h, params.half_period, c2, s2,
        int(renormalize_every), int(record_from), int(record_to), m_out,
    )


def evolve(
    lattice: SpinLattice,
    params: DriveParams,
    n_periods: int,
    observer: Callable[[int, SpinLattice], None] | None = None,
    sample_times: Iterable[int] | None = None,
    renormalize_every: int = DEFAULT_RENORMALIZE_EVERY,
) -> SpinLattice:
    """Apply ``n_periods`` periods.

    ``observer(n, lattice)`` is called for every period index ``n`` in
    ``sample_times`` (``0 <= n <= n_periods``) with the state after ``n``
    periods. The lattice handed to the observer is read-only.
    """
    if n_periods < 0:
        raise ValueError("n_periods must be >= 0")
    if n_periods == 0 and observer is None:
        return lattice
    times = sorted({int(t) for t in (sample_times or ()) if 0 <= t <= n_periods}) if observer else []
    spins = np.array(lattice.spins)
    t = 0
    for target in times:
        advance_inplace(spins, lattice.L, params, target - t, t, renormalize_every)
        t = target
        observer(t, lattice.with_spins(spins) if t else lattice)
    advance_inplace(spins, lattice.L, params, n_periods - t, t, renormalize_every)
    if n_periods == 0:
        return lattice
    return lattice.with_spins(spins)


def _rk4(f: Callable[[np.ndarray], np.ndarray], X: np.ndarray, dt: float, substeps: int) -> np.ndarray:
    for _ in range(substeps):
        k1 = f(X)
        k2 = f(X + 0.5 * dt * k1)
        k3 = f(X + 0.5 * dt * k2)
        k4 = f(X + dt * k3)
        X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return X


def reference_step(lattice: SpinLattice, params: DriveParams, substeps: int = 2000) -> SpinLattice:
    """One period by fixed-step RK4 integration of the precession equations.

    Test oracle only. The z-precession rate is re-evaluated from the current
    state at every stage instead of being frozen, so the integrator does not
    assume Sz conservation; spins are renormalized at the end of each half.
    """
    if substeps < 100:
        raise ValueError("reference integration needs at least 100 substeps per half period")
    nbr = lattice.geometry.neighbors
    h = params.h
    b = 2.0 * params.omega * float(params.g)
    dt = params.half_period / substeps

    def interaction_half(X):
        # dS/dt = kappa (e_z x S)
        kappa = h + X[2][nbr].sum(axis=1) / 6.0
        return np.stack([-kappa * X[1], kappa * X[0], np.zeros_like(X[2])])

    def kick_half(X):
        # dS/dt = 2 omega g (e_x x S)
        return np.stack([np.zeros_like(X[0]), -b * X[2], b * X[1]])

    X = _rk4(interaction_half, lattice.spins.copy(), dt, substeps)
    X /= np.linalg.norm(X, axis=0)
    X = _rk4(kick_half, X, dt, substeps)
    X /= np.linalg.norm(X, axis=0)
    return lattice.with_spins(X)
