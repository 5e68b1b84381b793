"""Spectral solver and diagnostics for the Navier-Stokes-Voigt system on the
periodic box, with a fully discrete implicit Euler / Fourier-Galerkin scheme
and a ledger of the identities and estimates the scheme satisfies."""

from .errors import (
    GridTooSmall,
    NSVError,
    NonlinearSolveFailed,
    PhiNotNonnegative,
    QuadratureUnresolved,
    ScheduleViolation,
)
from .fields import SpectralField, TrigPolynomial, norms
from .stepper import DiscreteTrajectory, SchemeParams, run

__version__ = "0.1.0"

__all__ = [
    "DiscreteTrajectory",
    "GridTooSmall",
    "NSVError",
    "NonlinearSolveFailed",
    "PhiNotNonnegative",
    "QuadratureUnresolved",
    "ScheduleViolation",
    "SchemeParams",
    "SpectralField",
    "TrigPolynomial",
    "norms",
    "run",
    "__version__",
]
