"""Round odd-dimensional spheres in stereographic charts, Hopf fields and Berger metrics.

Chart 0 projects from the north pole ``e_{n+1}`` and chart 1 from the south
pole; a point is placed in the chart whose origin is nearer. With
``q = 1 / (1 + |x|^2)`` and ``sigma = +1`` (chart 0) or ``-1`` (chart 1) the
embedding is ``X = (2 q x, sigma (1 - 2 q))`` and the pulled-back metric is
``4 q^2 delta_ij``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .config import DEFAULT_T_GRID
from .errors import InvalidPointError
from .sampling import sphere_points
from .tensor import (
    ChartPoint,
    ChartedMetric,
    ChartedVectorField,
    DeformedMetric,
    ScalarField,
    laplace_beltrami,
    covariant_hessian,
)

# vol(S^n) = 2 pi^((n+1)/2) / Gamma((n+1)/2): Gamma(2) = 1 gives 2 pi^2, Gamma(3) = 2 gives pi^3.
VOL_S3 = 2.0 * math.pi ** 2
VOL_S5 = math.pi ** 3


def round_volume(n):
    if n == 3:
        return VOL_S3
    if n == 5:
        return VOL_S5
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def _sigma(p):
    return 1.0 if p.chart_id == 0 else -1.0


def hopf_matrix(n):
    """Skew matrix J with ``J x = (-x2, x1, -x4, x3, ...)`` on R^(n+1)."""
    if n < 1 or n % 2 == 0:
        raise ValueError(f"Hopf field needs odd n, got {n}")
    j = np.zeros((n + 1, n + 1))
    for a in range(0, n + 1, 2):
        j[a + 1, a] = 1.0
        j[a, a + 1] = -1.0
    return j


def hopf_field_at(n, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (n + 1,):
        raise InvalidPointError(f"expected a point in R^{n + 1}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-12:
        raise InvalidPointError(f"point is off the unit sphere: |x| = {np.linalg.norm(x)!r}")
    return hopf_matrix(n) @ x


class RoundSphere:
    """The unit round sphere S^n, n odd and at least 3."""

    def __init__(self, n):
        if n < 3 or n % 2 == 0:
            raise ValueError(f"n must be odd and >= 3, got {n}")
        self.n = n
        self.ambient_dim = n + 1
        self.metric = ChartedMetric(n, self._g, self._dg, self._d2g)

    # -- charts -------------------------------------------------------------

    def chart_for(self, X):
        return 0 if X[-1] <= 0.0 else 1

    def point(self, X, chart=None):
        X = np.asarray(X, dtype=float)
        if abs(np.linalg.norm(X) - 1.0) > 1e-12:
            raise InvalidPointError(f"point is off the unit sphere: |X| = {np.linalg.norm(X)!r}")
        chart = self.chart_for(X) if chart is None else chart
        sigma = 1.0 if chart == 0 else -1.0
        denom = 1.0 - sigma * X[-1]
        if denom <= 1e-12:
            raise InvalidPointError(f"chart {chart} does not contain its projection pole")
        return ChartPoint(chart, X[:-1] / denom)

    def embed(self, p):
        x = np.asarray(p.coords)
        q = 1.0 / (1.0 + x @ x)
        return np.concatenate([2 * q * x, [_sigma(p) * (1 - 2 * q)]])

    def embed_jacobian(self, p):
        """``E[a, j] = d_j X^a``."""
        x = np.asarray(p.coords)
        n = self.n
        q = 1.0 / (1.0 + x @ x)
        e = np.empty((n + 1, n))
        e[:n] = 2 * q * np.eye(n) - 4 * q * q * np.outer(x, x)
        e[n] = 4 * _sigma(p) * q * q * x
        return e

    def embed_hessian(self, p):
        """``H[a, j, l] = d_j d_l X^a``."""
        x = np.asarray(p.coords)
        n = self.n
        q = 1.0 / (1.0 + x @ x)
        eye = np.eye(n)
        h = np.empty((n + 1, n, n))
        h[:n] = -4 * q * q * (
            np.einsum("aj,l->ajl", eye, x) + np.einsum("al,j->ajl", eye, x) + np.einsum("a,jl->ajl", x, eye)
        ) + 16 * q ** 3 * np.einsum("a,j,l->ajl", x, x, x)
        h[n] = _sigma(p) * (4 * q * q * eye - 16 * q ** 3 * np.outer(x, x))
        return h

    def sample_points(self, count, seed=0):
        return [self.point(X) for X in sphere_points(count, self.ambient_dim, seed)]

    # -- round metric in either chart ----------------------------------------

    def _g(self, p):
        x = np.asarray(p.coords)
        return 4.0 / (1.0 + x @ x) ** 2 * np.eye(self.n)

    def _dg(self, p):
        x = np.asarray(p.coords)
        q = 1.0 / (1.0 + x @ x)
        dphi = -16.0 * q ** 3 * x
        return np.einsum("ij,k->ijk", np.eye(self.n), dphi)

    def _d2g(self, p):
        x = np.asarray(p.coords)
        n = self.n
        q = 1.0 / (1.0 + x @ x)
        d2phi = -16.0 * q ** 3 * np.eye(n) + 96.0 * q ** 4 * np.outer(x, x)
        return np.einsum("ij,kl->ijkl", np.eye(n), d2phi)

    def pullback_metric(self, p):
        """Euclidean metric of R^(n+1) pulled back through the embedding."""
        e = self.embed_jacobian(p)
        return e.T @ e

    # -- fields ---------------------------------------------------------------

    def linear_field(self, A):
        """Tangent field ``X -> A X`` for skew ``A`` (a Killing field), in chart components.

        Writing ``A = [[B, b], [-b^T, 0]]`` the chart components are
        ``B x + sigma (b (|x|^2 - 1) / 2 - x (b . x))``.
        """
        A = np.asarray(A, dtype=float)
        n = self.n
        if A.shape != (n + 1, n + 1) or np.max(np.abs(A + A.T)) > 1e-14:
            raise ValueError("linear_field needs a skew-symmetric (n+1)x(n+1) matrix")
        B = A[:n, :n]
        b = A[:n, n]

        def comps(p):
            x = np.asarray(p.coords)
            return B @ x + _sigma(p) * (0.5 * b * (x @ x - 1.0) - x * (b @ x))

        def deriv(p):
            x = np.asarray(p.coords)
            return B + _sigma(p) * (np.outer(b, x) - (b @ x) * np.eye(n) - np.outer(x, b))

        return ChartedVectorField(n, comps, deriv)

    def hopf_field(self):
        return self.linear_field(hopf_matrix(self.n))

    def gradient_field(self, u):
        """Gradient of a scalar field for the round metric; derivatives by finite differences."""
        return ChartedVectorField(self.n, lambda p: np.linalg.solve(self.metric.metric(p), u.grad(p)))

    def ambient_scalar(self, F, grad_F, hess_F):
        """Restriction of a function on R^(n+1), given with its gradient and Hessian."""

        def value(p):
            return F(self.embed(p))

        def grad(p):
            return self.embed_jacobian(p).T @ grad_F(self.embed(p))

        def hess(p):
            X = self.embed(p)
            e = self.embed_jacobian(p)
            return e.T @ hess_F(X) @ e + np.einsum("a,ajl->jl", grad_F(X), self.embed_hessian(p))

        return ScalarField(value, grad, hess)

    def coordinate_function(self, axis):
        """``u = X^axis`` restricted to the sphere (axis counted from 1)."""
        if not 1 <= axis <= self.ambient_dim:
            raise ValueError(f"axis must be in 1..{self.ambient_dim}")
        e = np.zeros(self.ambient_dim)
        e[axis - 1] = 1.0
        zero = np.zeros((self.ambient_dim, self.ambient_dim))
        return self.ambient_scalar(lambda X: float(X[axis - 1]), lambda X: e, lambda X: zero)

    def ambient_vector(self, Y, p):
        return self.embed_jacobian(p) @ Y.components(p)

    def ambient_tensor(self, metric, p):
        """A chart (0,2)-tensor written in embedding coordinates; kills the normal direction."""
        e = self.embed_jacobian(p)
        e_pinv = np.linalg.solve(e.T @ e, e.T)
        return e_pinv.T @ metric.metric(p) @ e_pinv


def berger_metric(sphere, t):
    """Round metric deformed along the unit Hopf field."""
    return DeformedMetric(sphere.metric, sphere.hopf_field(), t, unit_length=True)


@dataclass
class BergerFamily:
    sphere: RoundSphere
    t_grid: tuple = DEFAULT_T_GRID

    def __post_init__(self):
        self.field = self.sphere.hopf_field()
        self.members = [berger_metric(self.sphere, t) for t in self.t_grid]

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


@dataclass
class CoordinateEigenfunction:
    axis: int
    sphere: RoundSphere

    def __post_init__(self):
        self.field = self.sphere.coordinate_function(self.axis)

    def value(self, p):
        return self.field.value(p)

    def hessian_residual(self, samples):
        """Max over samples of ``|nabla_i nabla_j u + g_ij u|``."""
        g = self.sphere.metric
        worst = 0.0
        for p in samples:
            r = covariant_hessian(self.field, g, p) + g.metric(p) * self.field.value(p)
            worst = max(worst, float(np.max(np.abs(r))))
        return worst


# --------------------------------------------------------------------------


@dataclass
class VolumeReport:
    n: int
    t: float
    estimate: float
    expected: float
    rel_error: float
    error_estimate: float
    samples: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "n": self.n,
            "t": self.t,
            "estimate": self.estimate,
            "expected": self.expected,
            "rel_error": self.rel_error,
            "error_estimate": self.error_estimate,
            "samples": self.samples,
        }


def volume(dm, sphere, N=1 << 14, seed=0):
    """Quasi-Monte-Carlo volume of a deformed round sphere.

    Averages ``sqrt(det g-bar / det g)`` over quasi-uniform points and
    multiplies by the round volume.
    """
    if N < 10_000:
        raise ValueError("volume quadrature needs N >= 10^4")
    ratios = np.empty(N)
    for idx, p in enumerate(sphere.sample_points(N, seed)):
        ratios[idx] = np.sqrt(np.linalg.det(dm.metric(p)) / np.linalg.det(dm.base.metric(p)))
    vol0 = round_volume(sphere.n)
    half = N // 2
    est = vol0 * float(np.mean(ratios))
    a = vol0 * float(np.mean(ratios[:half]))
    b = vol0 * float(np.mean(ratios[half:]))
    expected = math.sqrt(1.0 + dm.t) * vol0
    return VolumeReport(
        n=sphere.n,
        t=dm.t,
        estimate=est,
        expected=expected,
        rel_error=abs(est - expected) / expected,
        error_estimate=0.5 * abs(a - b),
        samples=N,
    )


def eigenfunction_check(u, dm, samples, eigenvalue=None):
    """Max over samples of ``|Delta-bar u - (-n + t/(1+t)) u|`` via the full tensor pipeline.

    ``u`` is a :class:`CoordinateEigenfunction` or any :class:`ScalarField`.
    """
    field_ = u.field if isinstance(u, CoordinateEigenfunction) else u
    n = dm.dim
    target = -n + dm.t / (1.0 + dm.t) if eigenvalue is None else eigenvalue
    full = dm.as_metric()
    worst = 0.0
    for p in samples:
        worst = max(worst, abs(laplace_beltrami(field_, full, p) - target * field_.value(p)))
    return worst


def chart_discrepancy(sphere, dm, u, X):
    """Differences of volume density ratio and Laplacian value between the two charts at X."""
    vals = []
    for chart in (0, 1):
        p = sphere.point(X, chart=chart)
        ratio = np.sqrt(np.linalg.det(dm.metric(p)) / np.linalg.det(dm.base.metric(p)))
        vals.append((ratio, laplace_beltrami(u, dm.as_metric(), p)))
    return abs(vals[0][0] - vals[1][0]), abs(vals[0][1] - vals[1][1])

