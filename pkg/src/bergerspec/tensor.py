"""Chart-based tensor calculus for Riemannian metrics.

Index conventions used throughout:

* ``dg[i, j, k] = d_k g_ij`` and ``d2g[i, j, k, l] = d_k d_l g_ij``
* ``gamma[k, i, j] = Gamma^k_ij``
* ``dY[i, j] = d_j Y^i`` for a vector field
* ``R[l, i, j, k] = R^l_ijk`` with ``R(d_j, d_k) d_i = R^l_ijk d_l``, i.e.
  ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from .config import DEFAULT_TOLERANCES, T_MIN_MARGIN
from .errors import KillingPreconditionError, SingularDeformationError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ChartPoint:
    chart_id: int
    coords: np.ndarray

    def shifted(self, delta):
        return ChartPoint(self.chart_id, np.asarray(self.coords, float) + delta)


def as_point(p):
    if isinstance(p, ChartPoint):
        return p
    return ChartPoint(0, np.asarray(p, dtype=float))


def _step(p, power):
    return EPS ** power * max(1.0, float(np.linalg.norm(p.coords)))


def central_jacobian(f, p, h):
    """Stack central differences of ``f`` along a new trailing axis."""
    n = len(p.coords)
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append((np.asarray(f(p.shifted(e))) - np.asarray(f(p.shifted(-e)))) / (2 * h))
    return np.stack(cols, axis=-1)


def nested_second(f, p, h):
    """Nested central differences, ``out[..., k, l] ~ d_k d_l f``."""
    n = len(p.coords)
    f0 = np.asarray(f(p))
    out = np.zeros(f0.shape + (n, n))
    eye = np.eye(n) * h
    for k in range(n):
        for l in range(k, n):
            d = (
                np.asarray(f(p.shifted(eye[k] + eye[l])))
                - np.asarray(f(p.shifted(eye[k] - eye[l])))
                - np.asarray(f(p.shifted(-eye[k] + eye[l])))
                + np.asarray(f(p.shifted(-eye[k] - eye[l])))
            ) / (4 * h * h)
            out[..., k, l] = d
            out[..., l, k] = d
    return out


class ChartedMetric:
    """A metric g_ij given in coordinates, with analytic or finite-difference derivatives.

    ``metric_fn``, ``deriv_fn`` and ``deriv2_fn`` receive a :class:`ChartPoint`.
    Missing derivative callables fall back to central differences with step
    ``eps**(1/3)`` (first) and ``eps**(1/4)`` (nested second) unless ``h`` /
    ``h2`` are given explicitly.
    """

    def __init__(self, dim, metric_fn, deriv_fn=None, deriv2_fn=None, h=None, h2=None):
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        self.dim = dim
        self._metric = metric_fn
        self._deriv = deriv_fn
        self._deriv2 = deriv2_fn
        self.h = h
        self.h2 = h2

    @property
    def deriv_mode(self):
        return "analytic" if self._deriv is not None else "finite-difference"

    def metric(self, p):
        return np.asarray(self._metric(as_point(p)), dtype=float)

    def inverse(self, p):
        return np.linalg.inv(self.metric(p))

    def deriv(self, p):
        p = as_point(p)
        if self._deriv is not None:
            return np.asarray(self._deriv(p), dtype=float)
        h = self.h if self.h is not None else _step(p, 1 / 3)
        return central_jacobian(self.metric, p, h)

    def deriv2(self, p):
        p = as_point(p)
        if self._deriv2 is not None:
            return np.asarray(self._deriv2(p), dtype=float)
        if self._deriv is not None:
            h = self.h if self.h is not None else _step(p, 1 / 3)
            return central_jacobian(self.deriv, p, h)
        h2 = self.h2 if self.h2 is not None else _step(p, 1 / 4)
        return nested_second(self.metric, p, h2)


class ChartedVectorField:
    """Contravariant components Y^i with derivatives ``dY[i, j] = d_j Y^i``."""

    def __init__(self, dim, components_fn, deriv_fn=None, h=None):
        self.dim = dim
        self._components = components_fn
        self._deriv = deriv_fn
        self.h = h

    @property
    def deriv_mode(self):
        return "analytic" if self._deriv is not None else "finite-difference"

    def components(self, p):
        return np.asarray(self._components(as_point(p)), dtype=float)

    def deriv(self, p):
        p = as_point(p)
        if self._deriv is not None:
            return np.asarray(self._deriv(p), dtype=float)
        h = self.h if self.h is not None else _step(p, 1 / 3)
        return central_jacobian(self.components, p, h)


class ScalarField:
    """A scalar function with gradient and Hessian in chart coordinates."""

    def __init__(self, value_fn, grad_fn=None, hess_fn=None, h=None, h2=None):
        self._value = value_fn
        self._grad = grad_fn
        self._hess = hess_fn
        self.h = h
        self.h2 = h2

    def value(self, p):
        return float(self._value(as_point(p)))

    def grad(self, p):
        p = as_point(p)
        if self._grad is not None:
            return np.asarray(self._grad(p), dtype=float)
        h = self.h if self.h is not None else _step(p, 1 / 3)
        return central_jacobian(lambda q: np.array(self._value(q)), p, h)

    def hess(self, p):
        p = as_point(p)
        if self._hess is not None:
            return np.asarray(self._hess(p), dtype=float)
        if self._grad is not None:
            h = self.h if self.h is not None else _step(p, 1 / 3)
            return central_jacobian(self.grad, p, h)
        h2 = self.h2 if self.h2 is not None else _step(p, 1 / 4)
        return nested_second(lambda q: np.array(self._value(q)), p, h2)


def euclidean_metric(dim):
    return ChartedMetric(
        dim,
        lambda p: np.eye(dim),
        lambda p: np.zeros((dim, dim, dim)),
        lambda p: np.zeros((dim, dim, dim, dim)),
    )


# --------------------------------------------------------------------------
# Deformed metric g + t Y (x) Y


@dataclass
class DeformedMetric:
    """The metric ``g_ij + t Y_i Y_j`` with ``Y_i = g_ij Y^j``.

    ``unit_length`` declares |Y| = 1, which lets degenerate t be rejected up
    front instead of at evaluation time.
    """

    base: ChartedMetric
    field: ChartedVectorField
    t: float
    unit_length: bool = False

    def __post_init__(self):
        self.t = float(self.t)
        if self.unit_length and self.t <= -1.0 + T_MIN_MARGIN:
            raise SingularDeformationError(
                f"singular deformation: t = {self.t} <= -1 for a unit-length field",
                t=self.t,
                denominator=1.0 + self.t,
            )

    @property
    def dim(self):
        return self.base.dim

    def lowered(self, p):
        return self.base.metric(p) @ self.field.components(p)

    def norm2(self, p):
        y = self.field.components(p)
        return float(y @ self.base.metric(p) @ y)

    def metric(self, p):
        y_low = self.lowered(p)
        return self.base.metric(p) + self.t * np.outer(y_low, y_low)

    def deriv(self, p):
        g = self.base.metric(p)
        dg = self.base.deriv(p)
        y = self.field.components(p)
        dy = self.field.deriv(p)
        y_low = g @ y
        # d_k Y_i = d_k g_ij Y^j + g_ij d_k Y^j
        dy_low = np.einsum("ijk,j->ik", dg, y) + g @ dy
        return dg + self.t * (
            np.einsum("ik,j->ijk", dy_low, y_low) + np.einsum("i,jk->ijk", y_low, dy_low)
        )

    def as_metric(self):
        """The deformed metric as a plain :class:`ChartedMetric` (no closed forms used)."""
        return ChartedMetric(self.dim, self.metric, self.deriv)


def inverse_deformed_metric(dm, p):
    """Closed-form inverse ``g^ij - t Y^i Y^j / (1 + t|Y|^2)``."""
    y = dm.field.components(p)
    g_inv = dm.base.inverse(p)
    denom = 1.0 + dm.t * float(y @ dm.base.metric(p) @ y)
    if denom <= EPS:
        raise SingularDeformationError(
            f"singular deformation: 1 + t|Y|^2 = {denom:.3e}", t=dm.t, denominator=denom
        )
    return g_inv - dm.t * np.outer(y, y) / denom


# --------------------------------------------------------------------------
# Connection and curvature


def christoffel(m, p):
    g_inv = m.inverse(p)
    dg = m.deriv(p)
    # lowered symbol [ij, l] = 1/2 (g_il,j + g_jl,i - g_ij,l)
    low = 0.5 * (np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - dg)
    gamma = np.einsum("kl,ijl->kij", g_inv, low)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def christoffel_deriv(m, p):
    """``out[k, i, j, m] = d_m Gamma^k_ij``."""
    g_inv = m.inverse(p)
    dg = m.deriv(p)
    d2g = m.deriv2(p)
    low = 0.5 * (np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - dg)
    dlow = 0.5 * (
        np.einsum("iljm->ijlm", d2g) + np.einsum("jlim->ijlm", d2g) - d2g
    )
    dg_inv = -np.einsum("ka,abm,bl->klm", g_inv, dg, g_inv)
    return np.einsum("klm,ijl->kijm", dg_inv, low) + np.einsum("kl,ijlm->kijm", g_inv, dlow)


def riemann(m, p):
    gamma = christoffel(m, p)
    dgamma = christoffel_deriv(m, p)
    # R^l_ijk = d_j G^l_ki - d_k G^l_ji + G^l_jm G^m_ki - G^l_km G^m_ji
    r = (
        np.einsum("lkij->lijk", dgamma)
        - np.einsum("ljik->lijk", dgamma)
        + np.einsum("ljm,mki->lijk", gamma, gamma)
        - np.einsum("lkm,mji->lijk", gamma, gamma)
    )
    return r


def curvature_operator(r, a, b, c):
    """Components of R(a, b)c."""
    return np.einsum("lijk,i,j,k->l", r, c, a, b)


def sectional_curvature(m, p, a, b):
    """Sectional curvature of the plane spanned by ``a`` and ``b``."""
    g = m.metric(p)
    r = riemann(m, p)
    e1 = a / np.sqrt(a @ g @ a)
    e2 = b - (e1 @ g @ b) * e1
    e2 = e2 / np.sqrt(e2 @ g @ e2)
    return float(curvature_operator(r, e1, e2, e2) @ g @ e1)


def bianchi_residual(m, p):
    r = riemann(m, p)
    cyc = r + np.einsum("lijk->ljki", r) + np.einsum("lijk->lkij", r)
    return float(np.max(np.abs(cyc)))


def covariant_hessian(u, m, p):
    gamma = christoffel(m, p)
    return u.hess(p) - np.einsum("kij,k->ij", gamma, u.grad(p))


def laplace_beltrami(u, m, p):
    """``g^ij (d_i d_j u - Gamma^k_ij d_k u)``."""
    return float(np.einsum("ij,ij->", m.inverse(p), covariant_hessian(u, m, p)))


def covariant_derivative_lowered(Y, m, p):
    """``out[i, j] = nabla_i Y_j``."""
    g = m.metric(p)
    dg = m.deriv(p)
    y = Y.components(p)
    y_low = g @ y
    d_ylow = np.einsum("jki,k->ij", dg, y) + np.einsum("jk,ki->ij", g, Y.deriv(p))
    return d_ylow - np.einsum("kij,k->ij", christoffel(m, p), y_low)


def covariant_derivative_mixed(Y, m, p):
    """``out[i, j] = nabla_i Y^j``."""
    return Y.deriv(p).T + np.einsum("jik,k->ij", christoffel(m, p), Y.components(p))


def _tensor_norm(t2, g_inv):
    return float(np.sqrt(abs(np.einsum("ia,jb,ij,ab->", g_inv, g_inv, t2, t2))))


# --------------------------------------------------------------------------
# Killing certification


@dataclass
class KillingReport:
    max_sym_residual: float
    max_div: float
    length_variation: float
    max_geodesic_residual: float
    samples: int = 0

    def passes(self, tol, require_constant_length=True):
        vals = [self.max_sym_residual, self.max_div, self.max_geodesic_residual]
        if require_constant_length:
            vals.append(self.length_variation)
        return max(vals) <= tol

    def residuals(self):
        return {
            "max_sym_residual": self.max_sym_residual,
            "max_div": self.max_div,
            "length_variation": self.length_variation,
            "max_geodesic_residual": self.max_geodesic_residual,
        }


def _killing_pointwise(Y, m, p):
    g = m.metric(p)
    g_inv = np.linalg.inv(g)
    nab = covariant_derivative_lowered(Y, m, p)
    sym = nab + nab.T
    div = float(np.einsum("ij,ij->", g_inv, nab))
    y = Y.components(p)
    geo = covariant_derivative_mixed(Y, m, p).T @ y  # Y^i nabla_i Y^j
    return (
        _tensor_norm(sym, g_inv),
        abs(div),
        float(np.sqrt(y @ g @ y)),
        float(np.sqrt(abs(geo @ g @ geo))),
    )


def killing_report(Y, m, samples):
    sym, div, lengths, geo = [], [], [], []
    for p in samples:
        a, b, c, d = _killing_pointwise(Y, m, p)
        sym.append(a)
        div.append(b)
        lengths.append(c)
        geo.append(d)
    lengths = np.asarray(lengths)
    return KillingReport(
        max_sym_residual=float(max(sym)),
        max_div=float(max(div)),
        length_variation=float(lengths.max() - lengths.min()),
        max_geodesic_residual=float(max(geo)),
        samples=len(lengths),
    )


def _killing_tol(dm, tolerances):
    analytic = dm.base.deriv_mode == "analytic" and dm.field.deriv_mode == "analytic"
    return tolerances.killing_tol if analytic else tolerances.fd_tol


def _require_killing(dm, p, tolerances):
    sym, _, _, geo = _killing_pointwise(dm.field, dm.base, p)
    tol = _killing_tol(dm, tolerances)
    worst = max(sym, geo)
    if worst > tol:
        report = KillingReport(sym, 0.0, 0.0, geo, samples=1)
        raise KillingPreconditionError(
            f"Killing check failed: residual {worst:.3e} > {tol:.1e}", report=report, residual=worst
        )


def certify_killing(dm, samples, tolerances=DEFAULT_TOLERANCES):
    """Run :func:`killing_report` and raise if the field is not a constant-length Killing field."""
    report = killing_report(dm.field, dm.base, samples)
    tol = _killing_tol(dm, tolerances)
    if not report.passes(tol):
        worst = max(report.residuals().values())
        raise KillingPreconditionError(
            f"Killing check failed: residual {worst:.3e} > {tol:.1e}", report=report, residual=worst
        )
    return report


# --------------------------------------------------------------------------
# Deformation identities


def deformed_christoffel_delta(dm, p, tolerances=DEFAULT_TOLERANCES, check=True):
    """Closed-form ``A^k_ij = t g^kl (Y_i nabla_j Y_l + Y_j nabla_i Y_l)``.

    Valid only for a Killing field of constant length; this is checked at
    ``p`` unless ``check=False``.
    """
    if check:
        _require_killing(dm, p, tolerances)
    g_inv = dm.base.inverse(p)
    y_low = dm.lowered(p)
    nab = covariant_derivative_lowered(dm.field, dm.base, p)  # nab[j, l] = nabla_j Y_l
    inner = np.einsum("i,jl->ijl", y_low, nab) + np.einsum("j,il->ijl", y_low, nab)
    return dm.t * np.einsum("kl,ijl->kij", g_inv, inner)


def christoffel_delta_bruteforce(dm, p):
    """``Gamma-bar - Gamma`` from two independent Christoffel evaluations."""
    return christoffel(dm.as_metric(), p) - christoffel(dm.base, p)


def trace_residuals(dm, p, tolerances=DEFAULT_TOLERANCES):
    """``(|A^k_ij g^ij|, |A^k_ij Y^i Y^j|)`` maxima at ``p``."""
    a = deformed_christoffel_delta(dm, p, tolerances)
    y = dm.field.components(p)
    tr_g = np.einsum("kij,ij->k", a, dm.base.inverse(p))
    tr_y = np.einsum("kij,i,j->k", a, y, y)
    return float(np.max(np.abs(tr_g))), float(np.max(np.abs(tr_y)))


def lemma_rhs(dm, u, p):
    """``Delta u - t/(1+t|Y|^2) Y^i Y^j nabla_i nabla_j u`` on the base metric."""
    y = dm.field.components(p)
    hess = covariant_hessian(u, dm.base, p)
    lap = float(np.einsum("ij,ij->", dm.base.inverse(p), hess))
    s = dm.t / (1.0 + dm.t * dm.norm2(p))
    return lap - s * float(y @ hess @ y)


def verify_deformed_laplacian(dm, u, samples, tolerances=DEFAULT_TOLERANCES):
    """Max over samples of |Delta-bar u - RHS|, with Delta-bar from the deformed metric alone."""
    certify_killing(dm, samples, tolerances)
    full = dm.as_metric()
    worst = 0.0
    for p in samples:
        worst = max(worst, abs(laplace_beltrami(u, full, p) - lemma_rhs(dm, u, p)))
    return worst


def sasaki_residual(m, Y, samples, trial_pairs, tolerances=DEFAULT_TOLERANCES, check=True):
    """Max g-norm of ``R(A,Y)B - g(Y,B)A + g(A,B)Y`` over samples and trial pairs."""
    if check:
        dm = DeformedMetric(m, Y, 0.0)
        certify_killing(dm, samples, tolerances)
    worst = 0.0
    for p in samples:
        g = m.metric(p)
        r = riemann(m, p)
        y = Y.components(p)
        for a, b in trial_pairs:
            defect = curvature_operator(r, a, y, b) - (y @ g @ b) * a + (a @ g @ b) * y
            worst = max(worst, float(np.sqrt(abs(defect @ g @ defect))))
    return worst


# --------------------------------------------------------------------------
# Reports


@dataclass
class ResidualReport:
    check: str
    samples: int
    residuals: dict
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "check": self.check,
            "samples": self.samples,
            "residuals": self.residuals,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }
        out.update(self.extra)
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)
