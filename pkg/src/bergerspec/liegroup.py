"""Left-invariant metrics on SU(2) = S^3 and their spectra via irreducible representations.

The Lie algebra basis X_1, X_2, X_3 is the quaternion units j, k, i acting as
left-invariant fields ``x -> x e_a``, so ``[X_a, X_b] = 2 eps_abc X_c``. With
``Q = I`` this is the unit round sphere and ``Q = diag(1, 1, 1+t)`` is the Berger
metric stretched along the Hopf field. The spin-j irrep carries the
degree-2j harmonics.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .groups import from_quaternion, invariance_residual, qmul, to_quaternion
from .spectral import EXACT_CLUSTER_RTOL, cluster
from .sphere import VOL_S3
from .tensor import ChartedMetric

DEFAULT_SPIN_CUTOFF = 6
_UNITS = np.eye(4)[[2, 3, 1]]  # j, k, i: the third direction is the Hopf field x -> x i


def spin_matrices(j):
    """Hermitian angular-momentum matrices (J_x, J_y, J_z) for spin j."""
    dim = int(round(2 * j)) + 1
    if abs(dim - 1 - 2 * j) > 1e-12 or j < 0:
        raise ValueError(f"2j must be a non-negative integer, got j = {j}")
    m = j - np.arange(dim)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        jp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jm = jp.conj().T
    return (jp + jm) / 2, (jp - jm) / 2j, jz


def irrep_generators(j):
    """Skew-hermitian ``d pi_j(X_a) = -2i J_a``, satisfying ``[X_a, X_b] = 2 eps_abc X_c``."""
    return tuple(-2j * m for m in spin_matrices(j))


def commutation_residual(gens):
    x1, x2, x3 = gens
    r = [
        x1 @ x2 - x2 @ x1 - 2 * x3,
        x2 @ x3 - x3 @ x2 - 2 * x1,
        x3 @ x1 - x1 @ x3 - 2 * x2,
    ]
    return max(float(np.max(np.abs(m))) for m in r)


def casimir(gens):
    return sum(g @ g for g in gens)


@dataclass
class LeftInvariantMetric:
    Q: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.shape != (3, 3) or np.max(np.abs(self.Q - self.Q.T)) > 1e-12:
            raise ValueError("Q must be a symmetric 3x3 matrix")
        np.linalg.cholesky(self.Q)  # raises LinAlgError if not positive definite

    @property
    def volume(self):
        return VOL_S3 * math.sqrt(float(np.linalg.det(self.Q)))

    def inv_sqrt(self):
        w, v = np.linalg.eigh(self.Q)
        return v @ np.diag(w ** -0.5) @ v.T

    def ambient(self, x):
        """The induced metric on R^4 at a point x of S^3 (zero on the normal direction)."""
        # components of x^{-1} v along j, k, i, as a 3x4 matrix in v
        xq_conj = to_quaternion(x) * np.array([1, -1, -1, -1])
        rows = []
        for v in np.eye(4):
            rows.append(qmul(xq_conj, to_quaternion(v))[[2, 3, 1]])
        M = np.array(rows).T
        return M.T @ self.Q @ M

    def charted(self, sphere):
        """The induced metric in the stereographic charts of ``sphere`` (a RoundSphere(3))."""

        def g(p):
            e = sphere.embed_jacobian(p)
            return e.T @ self.ambient(sphere.embed(p)) @ e

        return ChartedMetric(3, g)

    def frame(self, x):
        """Left-invariant frame ``x e_a`` at x, in sphere coordinates (rows)."""
        xq = to_quaternion(x)
        return np.array([from_quaternion(qmul(xq, e)) for e in _UNITS])


@dataclass
class GroupSpectrum:
    metric: LeftInvariantMetric
    eigenvalues: np.ndarray  # with multiplicity
    clusters: list
    lambda1: float
    attaining_spin: float
    volume: float
    spin_cutoff: float
    per_spin: dict = field(default_factory=dict)

    def rows(self, t=None):
        return [
            {"t": t, "k": k, "lambda_k": v, "multiplicity": m, "method": "irrep"}
            for k, (v, m) in enumerate(self.clusters)
        ]


def _irrep_block(Qinv_sqrt, j):
    gens = irrep_generators(j)
    frame = [sum(Qinv_sqrt[a, i] * gens[i] for i in range(3)) for a in range(3)]
    op = -sum(e @ e for e in frame)
    op = 0.5 * (op + op.conj().T)
    return np.linalg.eigvalsh(op)


def left_invariant_spectrum(Q, J=DEFAULT_SPIN_CUTOFF):
    """Laplacian spectrum of the left-invariant metric Q up to spin J.

    If lambda1 sits at the top spin the cutoff is raised by 2 until it does not.
    """
    metric = Q if isinstance(Q, LeftInvariantMetric) else LeftInvariantMetric(Q)
    qs = metric.inv_sqrt()
    while True:
        per_spin = {}
        values = []
        best = (math.inf, None)
        for two_j in range(0, int(round(2 * J)) + 1):
            j = two_j / 2
            ev = _irrep_block(qs, j)
            per_spin[j] = ev
            values.append(np.repeat(ev, two_j + 1))
            if two_j > 0 and ev.min() < best[0]:
                best = (float(ev.min()), j)
        if best[1] < J:
            break
        J += 2
    eig = np.sort(np.concatenate(values))
    return GroupSpectrum(
        metric, eig, cluster(eig, EXACT_CLUSTER_RTOL), best[0], best[1], metric.volume, J, per_spin
    )


def _normalized(diag, volume_target):
    base = np.diag(diag)
    scale = (volume_target / (VOL_S3 * math.sqrt(float(np.prod(diag))))) ** (2.0 / 3.0)
    return LeftInvariantMetric(scale * base)


def stretched_family(t, volume_target=VOL_S3, J=DEFAULT_SPIN_CUTOFF):
    """Volume-normalized stretched-fiber metric ``c(t) diag(1, 1, 1+t)`` and its lambda1."""
    if t < 0:
        raise ValueError("family parameter must be >= 0")
    metric = _normalized(np.array([1.0, 1.0, 1.0 + t]), volume_target)
    return metric, left_invariant_spectrum(metric, J).lambda1


def shrinking_family(t, volume_target=VOL_S3, J=DEFAULT_SPIN_CUTOFF):
    """Volume-normalized shrunk-fiber metric ``c(t) diag(1, 1, 1/(1+t))`` and its lambda1."""
    if t < 0:
        raise ValueError("family parameter must be >= 0")
    metric = _normalized(np.array([1.0, 1.0, 1.0 / (1.0 + t)]), volume_target)
    return metric, left_invariant_spectrum(metric, J).lambda1


def predicted_stretched_lambda1(t, volume_target=VOL_S3):
    return (1.0 + t) ** (1.0 / 3.0) * (3.0 - t / (1.0 + t)) * (VOL_S3 / volume_target) ** (2.0 / 3.0)


@dataclass
class CorollaryCertificate:
    name: str
    order: int
    residual: float
    passed: bool
    tolerance: float


def corollary_invariance(Q, G, sphere, samples, tol=1e-9):
    """Certify that left multiplication by every element of G preserves the metric Q.

    The metric is carried to the stereographic charts of ``sphere`` and checked
    with :func:`bergerspec.groups.invariance_residual`; ``samples`` are chart points.
    """
    metric = Q if isinstance(Q, LeftInvariantMetric) else LeftInvariantMetric(Q)
    worst = invariance_residual(metric.charted(sphere), G, sphere, samples)
    return CorollaryCertificate(getattr(G, "name", ""), G.order, worst, worst <= tol, tol)
