"""Pseudo-spectral laboratory for the fractional Navier-Stokes equations on the 3-torus."""

__version__ = "0.1.0"

from .exponents import LadderExponents, Undefined, exponents, is_defined
from .initial import InitialSpec, make_initial
from .solver import DiagnosticsConfig, FnseParams, Run, SolverState, run, step
from .spectral import GridSpec, PhysicalField, SpectralField

__all__ = [
    "__version__",
    "GridSpec",
    "SpectralField",
    "PhysicalField",
    "FnseParams",
    "SolverState",
    "DiagnosticsConfig",
    "Run",
    "run",
    "step",
    "InitialSpec",
    "make_initial",
    "LadderExponents",
    "Undefined",
    "exponents",
    "is_defined",
]
