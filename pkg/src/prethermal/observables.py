"""Magnetization, energies, decorrelator, stroboscopic spectra and 2D cuts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .dynamics import DriveParams
from .lattice import SpinLattice

D_INF = math.sqrt(2.0)

DEFAULT_ORDERS = tuple(Fraction(n) for n in range(2, 9)) + (Fraction(20, 7),)
PEAK_FACTOR = 5.0


def magnetization(lattice: SpinLattice) -> float:
    return float(np.mean(lattice.sz))


def pair_sum_z(lattice: SpinLattice) -> float:
    """``sum over unordered neighbour pairs of Sz_r Sz_r'`` (3N pairs)."""
    return float(_kernels.pair_sum_z(lattice.sz, lattice.L))


def energy_H1(lattice: SpinLattice, params: DriveParams) -> float:
    """Energy of the interaction half of the drive."""
    return pair_sum_z(lattice) / 6.0 + params.h * float(np.sum(lattice.sz))


def energy_HT(lattice: SpinLattice, params: DriveParams) -> float:
    """Period-averaged energy."""
    transverse = params.omega * float(params.g) * float(np.sum(lattice.sx))
    return pair_sum_z(lattice) / 12.0 + 0.5 * params.h * float(np.sum(lattice.sz)) + transverse


def decorrelator(a: SpinLattice, b: SpinLattice) -> float:
    """Root-mean-square distance between two configurations on the same lattice."""
    if a.geometry.L != b.geometry.L:
        raise ValueError(f"geometry mismatch: L={a.geometry.L} vs L={b.geometry.L}")
    diff = a.spins - b.spins
    return math.sqrt(float(np.einsum("ij,ij->", diff, diff)) / a.N)


def extract_slice(lattice: SpinLattice, axis: str = "z", layer: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``(Sx, Sz)`` on the plane ``i_axis == layer``.

    Arrays are ``L x L``, indexed by the two remaining coordinates in x, y, z
    order (``[ix, iy]`` for a cut at fixed ``iz``).
    """
    axes = {"x": 0, "y": 1, "z": 2}
    if axis not in axes:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 0 <= layer < lattice.L:
        raise IndexError(f"layer {layer} outside [0, {lattice.L})")
    index = [slice(None)] * 3
    index[axes[axis]] = layer
    index = tuple(index)
    return lattice.grid(0)[index].copy(), lattice.grid(2)[index].copy()


@dataclass
class SpectralResult:
    """``|m~(omega')|`` on the grid ``omega'_k = k omega / M``, ``k = 0 .. M-1``."""

    M: int
    start: int
    omega: float
    frequencies: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)
    transform: np.ndarray = field(repr=False)
    peak_index: int
    peak_frequency: float
    peak_amplitude: float
    is_peak: bool
    detected_order: Fraction | None

    @property
    def mean(self) -> float:
        return float(self.transform[0].real)

    def amplitude_at(self, frequency: float) -> float:
        k = int(round(frequency * self.M / self.omega)) % self.M
        return float(self.amplitude[k])


def _detect_order(peak_index: int, M: int, candidates) -> Fraction | None:
    best, best_dist = None, None
    for n in candidates:
        n = Fraction(n)
        dist = abs(peak_index - M / n)
        if dist <= 1 and (best_dist is None or dist < best_dist):
            best, best_dist = n, dist
    return best


def fourier_spectrum(
    m_series,
    omega: float,
    window: tuple[int, int] | None = None,
    candidates=DEFAULT_ORDERS,
    peak_factor: float = PEAK_FACTOR,
) -> SpectralResult:
    """Stroboscopic spectrum ``m~(omega') = (1/M) sum_n m(nT) exp(-i omega' n T)``.

    ``window = (start, stop)`` selects ``m_series[start:stop]`` (rectangular,
    no padding). The reported peak is the largest bin with ``0 < omega' <= omega/2``
    (the rest of the grid mirrors it); it counts as a peak when it exceeds
    ``peak_factor`` times the median amplitude of all ``k != 0`` bins, and its
    order ``n`` is the candidate with ``omega/n`` within one bin of it.
    """
    m = np.asarray(m_series, dtype=np.float64)
    start, stop = (0, m.size) if window is None else window
    if not 0 <= start <= stop <= m.size:
        raise ValueError(f"window {window} outside series of length {m.size}")
    m = m[start:stop]
    M = m.size
    if M == 0:
        raise ValueError("empty window")
    if M < 16:
        raise ValueError(f"window must hold at least 16 periods, got {M}")
    transform = np.fft.fft(m) / M
    amplitude = np.abs(transform)
    frequencies = np.arange(M) * (omega / M)
    half = amplitude[1 : M // 2 + 1]
    k = 1 + int(np.argmax(half))
    threshold = peak_factor * float(np.median(amplitude[1:]))
    is_peak = bool(amplitude[k] > threshold)
    order = _detect_order(k, M, candidates) if is_peak else None
    return SpectralResult(
        M=M,
        start=start,
        omega=omega,
        frequencies=frequencies,
        amplitude=amplitude,
        transform=transform,
        peak_index=k,
        peak_frequency=float(frequencies[k]),
        peak_amplitude=float(amplitude[k]),
        is_peak=is_peak,
        detected_order=order,
    )


@dataclass
class TrajectoryRecord:
    """Stroboscopic observables at the period indices ``sample_times``.

    ``m``, ``H1`` and ``HT`` refer to the reference copy; ``d`` (twin runs
    only) is the decorrelator between the reference and perturbed copy.
    ``period`` converts period indices to time.
    """

    sample_times: np.ndarray
    m: np.ndarray
    H1: np.ndarray
    HT: np.ndarray
    d: np.ndarray | None = None
    period: float = 1.0

    def __post_init__(self):
        self.sample_times = np.asarray(self.sample_times, dtype=np.int64)
        n = self.sample_times.size
        for name in ("m", "H1", "HT", "d"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        if np.any(np.diff(self.sample_times) <= 0):
            raise ValueError("sample_times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.sample_times.size)

    @property
    def times(self) -> np.ndarray:
        return self.sample_times * self.period

    def select(self, mask) -> TrajectoryRecord:
        return TrajectoryRecord(
            self.sample_times[mask], self.m[mask], self.H1[mask], self.HT[mask],
            None if self.d is None else self.d[mask], self.period,
        )

    def stroboscopic_view(self, stride: int = 4) -> TrajectoryRecord:
        """Samples at multiples of ``stride`` periods only."""
        return self.select(self.sample_times % stride == 0)
