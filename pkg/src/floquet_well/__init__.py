"""Floquet quasienergies, level crossings and decay of a square well with an oscillating barrier."""

from .errors import (ClassificationError, ConditioningError, ContinuationError, ConvergenceError,
                     DomainError, FloquetWellError, PoleError)
from .floquet import (FloquetRoot, Truncation, floquet_residual, matching_residuals,
                      reduce_to_first_zone, solve_floquet)
from .model import StaticLevel, WellConfig, enumerate_static_levels, reference_well, solve_static
from .observables import (DensityProfile, NondecayCurve, assemble_wavefunction, density_profile,
                          nondecay_probability, periodic_factor)
from .spectra import Branch, CrossingEvent, classify_crossing, crossing_scan, trace_branch

__version__ = "0.1.0"

__all__ = [
    "Branch", "ClassificationError", "ConditioningError", "ContinuationError", "ConvergenceError",
    "CrossingEvent", "DensityProfile", "DomainError", "FloquetRoot", "FloquetWellError",
    "NondecayCurve", "PoleError", "StaticLevel", "Truncation", "WellConfig",
    "assemble_wavefunction", "classify_crossing", "crossing_scan", "density_profile",
    "enumerate_static_levels", "floquet_residual", "matching_residuals", "nondecay_probability",
    "periodic_factor", "reduce_to_first_zone", "reference_well", "solve_floquet", "solve_static",
    "trace_branch",
]
