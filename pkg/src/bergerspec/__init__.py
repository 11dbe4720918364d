"""Berger deformations of round spheres and SU(2): tensor checks, spectra, group actions."""

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (
    AssemblyError,
    BergerError,
    InvalidPointError,
    KillingPreconditionError,
    NotFiniteError,
    NotFreeError,
    QuadratureRankError,
    SingularDeformationError,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLERANCES",
    "Tolerances",
    "AssemblyError",
    "BergerError",
    "InvalidPointError",
    "KillingPreconditionError",
    "NotFiniteError",
    "NotFreeError",
    "QuadratureRankError",
    "SingularDeformationError",
]
