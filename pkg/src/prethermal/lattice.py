"""Cubic lattice geometry, spin microstates and random initial conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# RNG channels; every draw is addressed by (seed, channel, site)
THETA, PHI, TWIN_THETA, TWIN_PHI = 0, 1, 2, 3


@dataclass(frozen=True)
class LatticeGeometry:
    """Simple cubic lattice of edge ``L`` with periodic boundaries.

    Site ``i`` has coordinates ``(ix, iy, iz)`` with ``i = (iz * L + iy) * L + ix``.
    ``neighbors[i]`` lists the six neighbours in the order -x, +x, -y, +y, -z, +z;
    for ``L == 2`` opposite neighbours coincide and appear twice.
    """

    L: int
    neighbors: np.ndarray = field(repr=False, compare=False)

    @property
    def N(self) -> int:
        return self.L**3

    def index(self, ix: int, iy: int, iz: int) -> int:
        L = self.L
        return ((iz % L) * L + (iy % L)) * L + (ix % L)

    def coords(self, i: int) -> tuple[int, int, int]:
        L = self.L
        iz, rem = divmod(int(i), L * L)
        iy, ix = divmod(rem, L)
        return ix, iy, iz


def build_geometry(L: int) -> LatticeGeometry:
    if int(L) != L or L < 2:
        raise ValueError(f"lattice edge L must be an integer >= 2, got {L!r}")
    L = int(L)
    idx = np.arange(L**3, dtype=np.int64).reshape(L, L, L)  # axes (z, y, x)
    columns = []
    for axis in (2, 1, 0):
        columns.append(np.roll(idx, 1, axis=axis).ravel())  # neighbour at -1
        columns.append(np.roll(idx, -1, axis=axis).ravel())  # neighbour at +1
    neighbors = np.ascontiguousarray(np.stack(columns, axis=1))
    neighbors.setflags(write=False)
    return LatticeGeometry(L, neighbors)


@dataclass(frozen=True)
class InitialConditionSpec:
    """Initial-state recipe: polar width ``2*pi*W``, twin kick ``2*pi*delta``."""

    W: float = 0.1
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.W >= 0 and math.isfinite(self.W)):
            raise ValueError(f"W must be finite and >= 0, got {self.W!r}")
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass(frozen=True, eq=False)
class SpinLattice:
    """Spin configuration on a cubic lattice.

    ``spins`` has shape ``(3, N)`` (component-major). ``theta``/``phi`` hold the
    spherical angles the state was generated from, when known; they are what
    :func:`perturb_twin` perturbs. Arrays are read-only: evolution returns new
    lattices.
    """

    geometry: LatticeGeometry
    spins: np.ndarray
    theta: np.ndarray | None = None
    phi: np.ndarray | None = None

    def __post_init__(self):
        spins = np.ascontiguousarray(self.spins, dtype=np.float64)
        if spins.shape != (3, self.geometry.N):
            raise ValueError(f"spins must have shape (3, {self.geometry.N}), got {spins.shape}")
        if spins is self.spins:
            spins = spins.copy()
        spins.setflags(write=False)
        object.__setattr__(self, "spins", spins)
        for name in ("theta", "phi"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def L(self) -> int:
        return self.geometry.L

    @property
    def N(self) -> int:
        return self.geometry.N

    @property
    def sx(self) -> np.ndarray:
        return self.spins[0]

    @property
    def sy(self) -> np.ndarray:
        return self.spins[1]

    @property
    def sz(self) -> np.ndarray:
        return self.spins[2]

    @property
    def vectors(self) -> np.ndarray:
        """``(N, 3)`` view of the spins."""
        return self.spins.T

    def with_spins(self, spins: np.ndarray) -> SpinLattice:
        """New lattice on the same geometry; stored angles are dropped."""
        return SpinLattice(self.geometry, spins)

    def grid(self, component: int) -> np.ndarray:
        """Component as an ``(L, L, L)`` array indexed ``[ix, iy, iz]``."""
        L = self.L
        return self.spins[component].reshape(L, L, L).transpose(2, 1, 0)

    def translated(self, shift: tuple[int, int, int]) -> SpinLattice:
        """Configuration moved by the lattice vector ``shift = (dx, dy, dz)``."""
        L = self.L
        dx, dy, dz = shift
        moved = np.roll(self.spins.reshape(3, L, L, L), (dz, dy, dx), axis=(1, 2, 3))
        return self.with_spins(moved.reshape(3, -1))

    def max_norm_error(self) -> float:
        return float(np.max(np.abs(np.einsum("ij,ij->j", self.spins, self.spins) - 1.0)))


def _uniforms(seed: int, channel: int, start: int, count: int) -> np.ndarray:
    """Uniform pairs ``u[site, 0:2]`` on ``[0, 1)`` for sites ``start .. start+count-1``.

    Site ``i`` of a channel always consumes raw Philox outputs ``2i`` and
    ``2i+1``, so any block of sites can be generated independently and in any
    order.
    """
    bitgen = np.random.Philox(key=np.array([seed, channel], dtype=np.uint64))
    first = 2 * start
    # Philox4x64 emits four 64-bit words per counter increment
    bitgen.advance(first // 4)
    skip = first % 4
    raw = np.random.Generator(bitgen).random(skip + 2 * count)
    return raw[skip:].reshape(count, 2)


def site_normals(seed: int, channel: int, count: int, start: int = 0) -> np.ndarray:
    """Standard normal per site (Box-Muller on the site's uniform pair)."""
    u = _uniforms(seed, channel, start, count)
    return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def site_uniforms(seed: int, channel: int, count: int, start: int = 0) -> np.ndarray:
    return _uniforms(seed, channel, start, count)[:, 0]


def spherical_to_cartesian(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def init_polarized(geometry: LatticeGeometry, spec: InitialConditionSpec) -> SpinLattice:
    """Spins near +z: ``theta ~ N(0, (2 pi W)^2)``, ``phi ~ U[0, 2 pi)``."""
    N = geometry.N
    theta = 2.0 * np.pi * spec.W * site_normals(spec.seed, THETA, N)
    phi = 2.0 * np.pi * site_uniforms(spec.seed, PHI, N)
    return SpinLattice(geometry, spherical_to_cartesian(theta, phi), theta, phi)


def init_random(geometry: LatticeGeometry, seed: int) -> SpinLattice:
    """Uniformly random orientations (infinite-temperature state)."""
    N = geometry.N
    cos_t = 2.0 * site_uniforms(seed, THETA, N) - 1.0
    theta = np.arccos(cos_t)
    phi = 2.0 * np.pi * site_uniforms(seed, PHI, N)
    return SpinLattice(geometry, spherical_to_cartesian(theta, phi), theta, phi)


def perturb_twin(lattice: SpinLattice, spec: InitialConditionSpec) -> SpinLattice:
    """Copy with each angle shifted by ``2 pi delta`` times a standard normal.

    Only lattices that still carry their generating angles can be perturbed;
    the kick is applied in angle space, not to Cartesian components.
    """
    if lattice.theta is None or lattice.phi is None:
        raise ValueError("lattice has no stored angles; twin perturbation needs the generating theta/phi")
    N = lattice.N
    if spec.delta == 0:
        return SpinLattice(lattice.geometry, lattice.spins, lattice.theta, lattice.phi)
    scale = 2.0 * np.pi * spec.delta
    theta = lattice.theta + scale * site_normals(spec.seed, TWIN_THETA, N)
    phi = lattice.phi + scale * site_normals(spec.seed, TWIN_PHI, N)
    return SpinLattice(lattice.geometry, spherical_to_cartesian(theta, phi), theta, phi)
