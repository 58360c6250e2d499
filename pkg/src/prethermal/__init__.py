"""Periodically driven classical spins on a cubic lattice.

Exact stroboscopic evolution, twin-copy chaos diagnostics, subharmonic
spectra and prethermal/thermal timescales.
"""

__version__ = "0.1.0"

from .dynamics import DriveParams, evolve, floquet_step, local_field, reference_step
from .lattice import (
    InitialConditionSpec,
    LatticeGeometry,
    SpinLattice,
    build_geometry,
    init_polarized,
    init_random,
    perturb_twin,
)
from .observables import (
    D_INF,
    SpectralResult,
    TrajectoryRecord,
    decorrelator,
    energy_H1,
    energy_HT,
    extract_slice,
    fourier_spectrum,
    magnetization,
)
from .fits import TimescaleFit, crossing_times, fit_heating_exponent, fit_lyapunov
from .simulation import SamplingPlan, simulate
from .studies import EnsembleSpec, PointSpec, SweepSpec, run_ensemble, run_point, run_sweep

__all__ = [
    "D_INF", "DriveParams", "EnsembleSpec", "InitialConditionSpec", "LatticeGeometry", "PointSpec",
    "SamplingPlan", "SpectralResult", "SpinLattice", "SweepSpec", "TimescaleFit", "TrajectoryRecord",
    "build_geometry", "crossing_times", "decorrelator", "energy_H1", "energy_HT", "evolve",
    "extract_slice", "fit_heating_exponent", "fit_lyapunov", "floquet_step", "fourier_spectrum",
    "init_polarized", "init_random", "local_field", "magnetization", "perturb_twin", "reference_step",
    "run_ensemble", "run_point", "run_sweep", "simulate",
]
