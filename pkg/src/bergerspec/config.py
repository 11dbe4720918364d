"""Default numerical tolerances, kept in one place so reports are auditable."""

from dataclasses import dataclass, replace, asdict

# Default deformation grid; exercises both t -> -1+ and t -> infinity.
DEFAULT_T_GRID = (-0.9, -0.5, 0.0, 0.5, 1.0, 3.0, 10.0, 100.0)

# Smallest admissible t for a unit-length field (denominator 1 + t vanishes at -1).
T_MIN_MARGIN = 1e-9


@dataclass(frozen=True)
class Tolerances:
    lemma_tol: float = 1e-7
    identity_tol: float = 1e-10
    fd_tol: float = 1e-4
    christoffel_tol: float = 1e-8
    killing_tol: float = 1e-9
    sasaki_tol: float = 1e-6
    branch_tol: float = 1e-9
    invariance_tol: float = 1e-9
    quadrature_rel_tol: float = 1e-2
    volume_rel_tol: float = 5e-3

    def override(self, **kwargs):
        """Return a copy with the non-None entries of ``kwargs`` replaced."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def as_dict(self):
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
