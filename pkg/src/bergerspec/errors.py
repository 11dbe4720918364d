"""Exception hierarchy. Certification errors carry the measured residual."""


class BergerError(Exception):
    """Base class for all errors raised by this package."""


class SingularDeformationError(BergerError, ValueError):
    """The deformed metric is degenerate (1 + t|Y|^2 <= 0 up to margin)."""

    def __init__(self, message, t=None, denominator=None):
        super().__init__(message)
        self.t = t
        self.denominator = denominator


class InvalidPointError(BergerError, ValueError):
    """A point is off the manifold or outside a chart domain."""


class KillingPreconditionError(BergerError):
    """A vector field failed the Killing / constant-length certification."""

    def __init__(self, message, report=None, residual=None):
        super().__init__(message)
        self.report = report
        self.residual = residual


class AssemblyError(BergerError):
    """A harmonic block or operator failed one of its structural checks."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuadratureRankError(BergerError):
    """The quadrature mass matrix is not positive definite."""


class NotFiniteError(BergerError):
    """Group closure exceeded the element cap."""

    def __init__(self, message, size=None):
        super().__init__(message)
        self.size = size


class NotFreeError(BergerError):
    """A group element has a fixed point on the sphere."""

    def __init__(self, message, element=None, distance=None):
        super().__init__(message)
        self.element = element
        self.distance = distance
