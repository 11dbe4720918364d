"""Spectrum of the Berger Laplacian on S^3 by hyperspherical-harmonic blocks.

Two independent routes:

* exact blocks: on each space of degree-l harmonics the deformed operator is
  ``l(l+2) I + s * YY`` with ``s = t/(1+t)`` and ``YY`` the matrix of the Hopf
  derivation applied twice;
* quadrature Galerkin: stiffness and mass matrices of the deformed metric
  assembled by quasi-Monte-Carlo over S^3, solved as a generalized problem.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
import csv
import io
import math

import numpy as np
import scipy.linalg
import sympy

from .config import DEFAULT_T_GRID, DEFAULT_TOLERANCES
from .errors import AssemblyError, QuadratureRankError, SingularDeformationError
from .sampling import sphere_points
from .sphere import VOL_S3, hopf_matrix

L_MAX = 8
EXACT_T_MIN = -0.99
QUADRATURE_T_MIN = -0.9
EXACT_CLUSTER_RTOL = 1e-6
QUADRATURE_CLUSTER_RTOL = 1e-2

# Hopf derivation -x2 d1 + x1 d2 - x4 d3 + x3 d4, as (source variable, target variable, sign):
# the term c * x_src * d_tgt.
_HOPF_TERMS = [(1, 0, -1), (0, 1, 1), (3, 2, -1), (2, 3, 1)]


def monomials(degree, nvars=4):
    """Exponent tuples of all monomials of the given degree, in a fixed order."""
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for v in combo:
            e[v] += 1
        out.append(tuple(e))
    return sorted(out, reverse=True)


def _index(monos):
    return {m: k for k, m in enumerate(monos)}


def flat_laplacian_matrix(degree):
    """Integer matrix of the R^4 Laplacian from degree ``degree`` to ``degree - 2``."""
    src = monomials(degree)
    if degree < 2:
        return sympy.zeros(0, len(src))
    dst = _index(monomials(degree - 2))
    mat = sympy.zeros(len(dst), len(src))
    for col, e in enumerate(src):
        for i in range(4):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                mat[dst[tuple(f)], col] += e[i] * (e[i] - 1)
    return mat


def hopf_derivation_matrix(degree):
    """Integer matrix of the Hopf derivation on degree-``degree`` monomials."""
    monos = monomials(degree)
    idx = _index(monos)
    mat = sympy.zeros(len(monos), len(monos))
    for col, e in enumerate(monos):
        for src, tgt, sign in _HOPF_TERMS:
            if e[tgt] == 0:
                continue
            f = list(e)
            f[tgt] -= 1
            f[src] += 1
            mat[idx[tuple(f)], col] += sign * e[tgt]
    return mat


def _half_gamma_ratio(k):
    # Gamma(k + 1/2) / sqrt(pi) = (2k)! / (4^k k!)
    return Fraction(math.factorial(2 * k), 4 ** k * math.factorial(k))


@lru_cache(maxsize=None)
def sphere_moment(exps):
    """``int_{S^3} x^exps dmu / pi^2`` as an exact rational; zero if any exponent is odd."""
    if any(e % 2 for e in exps):
        return Fraction(0)
    ks = [e // 2 for e in exps]
    num = Fraction(2)
    for k in ks:
        num *= _half_gamma_ratio(k)
    return num / math.factorial(sum(ks) + 1)


def sphere_moment_float(exps):
    return float(sphere_moment(tuple(exps))) * math.pi ** 2


@dataclass
class HarmonicBlock:
    """Degree-l harmonics on S^3 with the round Laplacian and the Hopf operator YY.

    ``coeffs[:, a]`` holds the monomial coefficients of the a-th basis function,
    orthonormal in L^2(S^3) for the round measure (total mass 2 pi^2).
    """

    degree: int
    monomials: list
    kernel: object  # exact sympy Matrix, columns span the harmonics
    coeffs: np.ndarray
    op_Y: np.ndarray
    op_YY: np.ndarray
    weights: np.ndarray

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def op_laplace(self):
        return -self.degree * (self.degree + 2) * np.eye(self.dim)


@lru_cache(maxsize=None)
def build_harmonic_basis(l):
    if not 0 <= l <= L_MAX:
        raise ValueError(f"degree must be in 0..{L_MAX}, got {l}")
    monos = monomials(l)
    nm = len(monos)
    lap = flat_laplacian_matrix(l)
    if l < 2:
        kernel = sympy.eye(nm)
        free = list(range(nm))
    else:
        basis = lap.nullspace()
        kernel = sympy.Matrix.hstack(*basis)
        _, pivots = lap.rref()
        free = [c for c in range(nm) if c not in pivots]
    if kernel.shape[1] != (l + 1) ** 2:
        raise AssemblyError(f"degree {l}: harmonic space has dim {kernel.shape[1]} != {(l + 1) ** 2}")

    D = hopf_derivation_matrix(l)
    DK = D * kernel
    if l >= 2 and any(v != 0 for v in lap * DK):
        raise AssemblyError(f"degree {l}: Hopf derivation does not preserve harmonicity")
    # nullspace vectors are unit on their own free variable and zero on the others
    R = DK.extract(free, list(range(kernel.shape[1])))
    if kernel * R != DK:
        raise AssemblyError(f"degree {l}: Hopf derivation leaves the harmonic span")

    K = np.array(kernel.tolist(), dtype=float)
    moments = np.array(
        [[sphere_moment_float(tuple(a + b for a, b in zip(ma, mb))) for mb in monos] for ma in monos]
    )
    gram = K.T @ moments @ K
    chol = np.linalg.cholesky(gram)
    C = scipy.linalg.solve_triangular(chol, np.eye(len(chol)), lower=True).T  # chol^{-T}
    coeffs = K @ C
    Rf = np.array(R.tolist(), dtype=float)
    op_y = chol.T @ Rf @ C
    skew = float(np.max(np.abs(op_y + op_y.T))) if op_y.size else 0.0
    if skew > 1e-8:
        raise AssemblyError(f"degree {l}: Hopf operator not skew-adjoint ({skew:.2e})", residual=skew)
    op_y = 0.5 * (op_y - op_y.T)
    op_yy = op_y @ op_y
    op_yy = 0.5 * (op_yy + op_yy.T)
    eig = np.linalg.eigvalsh(op_yy)
    if eig.size and eig.max() > 1e-8:
        raise AssemblyError(f"degree {l}: YY is not negative semi-definite", residual=float(eig.max()))
    weights = np.sqrt(np.clip(-eig, 0.0, None))
    return HarmonicBlock(l, monos, kernel, coeffs, op_y, op_yy, weights)


def weight_pattern(block):
    """Multiset of |Hopf weight| on a block, as {weight: multiplicity}."""
    rounded = np.rint(block.weights).astype(int)
    # compare squares: sqrt amplifies round-off near weight 0
    if np.max(np.abs(block.weights ** 2 - rounded ** 2), initial=0.0) > 1e-8:
        raise AssemblyError(f"degree {block.degree}: non-integral Hopf weights")
    vals, counts = np.unique(rounded, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def deformation_factor(t, t_min=EXACT_T_MIN):
    if t < t_min:
        raise SingularDeformationError(f"singular deformation: t = {t} below {t_min}", t=t)
    return t / (1.0 + t)


def assemble_block_operator(block, t):
    """Matrix of ``-(Delta - s YY)`` on the block, ``s = t/(1+t)``."""
    s = deformation_factor(t)
    l = block.degree
    return l * (l + 2) * np.eye(block.dim) + s * block.op_YY


# --------------------------------------------------------------------------


def cluster(values, rtol):
    """Group sorted values into (value, multiplicity) runs at relative tolerance."""
    out = []
    for v in np.sort(values):
        if out and abs(v - out[-1][0]) <= rtol * max(1.0, abs(out[-1][0])):
            mean, k = out[-1]
            out[-1] = ((mean * k + v) / (k + 1), k + 1)
        else:
            out.append((float(v), 1))
    return out


@dataclass
class SpectrumResult:
    t: float
    L: int
    eigenvalues: np.ndarray
    method: str
    lambda1: float
    clusters: list = field(default_factory=list)
    lambda1_cell: tuple = None  # (degree, |weight|) attaining lambda1, exact path only

    @property
    def count(self):
        return len(self.eigenvalues)

    def rows(self):
        return [
            {"t": self.t, "k": k, "lambda_k": val, "multiplicity": mult, "method": self.method}
            for k, (val, mult) in enumerate(self.clusters)
        ]

    def to_dict(self):
        return {
            "t": self.t,
            "L": self.L,
            "method": self.method,
            "lambda1": self.lambda1,
            "lambda1_cell": list(self.lambda1_cell) if self.lambda1_cell else None,
            "clusters": [[v, m] for v, m in self.clusters],
            "count": self.count,
        }


CSV_COLUMNS = ["t", "k", "lambda_k", "multiplicity", "method"]


def spectra_to_csv(results):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for res in results:
        for row in res.rows():
            writer.writerow({**row, "lambda_k": repr(float(row["lambda_k"]))})
    return buf.getvalue()


def spectrum(L, t):
    if L < 2:
        raise ValueError(f"degree cutoff L must be >= 2, got {L}")
    deformation_factor(t)
    values = []
    best = (math.inf, None)
    for l in range(L + 1):
        block = build_harmonic_basis(l)
        evals, evecs = np.linalg.eigh(assemble_block_operator(block, t))
        values.append(evals)
        if l == 0:
            continue
        k = int(np.argmin(evals))
        if evals[k] < best[0] - 1e-12:
            v = evecs[:, k]
            w = math.sqrt(max(0.0, -float(v @ block.op_YY @ v)))
            best = (float(evals[k]), (l, int(round(w))))
    eig = np.sort(np.concatenate(values))
    clusters = cluster(eig, EXACT_CLUSTER_RTOL)
    return SpectrumResult(float(t), L, eig, "exact_block", best[0], clusters, best[1])


def predicted_lambda1(t, n=3):
    return n - t / (1.0 + t)


@dataclass
class BranchReport:
    t_grid: list
    lambda1_values: list
    predicted: list
    deviations: list
    cells: list
    gaps: list
    jumps: list
    jump_bounds: list
    max_deviation: float
    continuity_ok: bool
    branch_intact: bool
    tolerance: float

    def to_dict(self):
        return {
            "t_grid": list(self.t_grid),
            "lambda1_values": self.lambda1_values,
            "predicted": self.predicted,
            "deviations": self.deviations,
            "cells": [list(c) for c in self.cells],
            "gaps": self.gaps,
            "jumps": self.jumps,
            "jump_bounds": self.jump_bounds,
            "max_deviation": self.max_deviation,
            "continuity_ok": self.continuity_ok,
            "branch_intact": self.branch_intact,
            "tolerance": self.tolerance,
        }


def lambda1_branch(t_grid=DEFAULT_T_GRID, L=4, tol=DEFAULT_TOLERANCES.branch_tol):
    """Follow lambda1(t) over a grid against the closed form ``3 - t/(1+t)``.

    The branch is intact when every grid point matches within ``tol`` and the
    minimizing cell stays in the degree-1 block.
    """
    results = [spectrum(L, t) for t in t_grid]
    lam = [r.lambda1 for r in results]
    pred = [predicted_lambda1(t) for t in t_grid]
    dev = [abs(a - b) for a, b in zip(lam, pred)]
    cells = [r.lambda1_cell for r in results]
    gaps = []
    for r in results:
        above = [v for v, _ in r.clusters if v > r.lambda1 * (1 + EXACT_CLUSTER_RTOL)]
        gaps.append(above[0] - r.lambda1 if above else math.nan)
    jumps, bounds = [], []
    for k in range(1, len(t_grid)):
        jumps.append(abs(lam[k] - lam[k - 1]))
        bounds.append(abs(pred[k] - pred[k - 1]) + tol)
    continuity_ok = all(j <= b for j, b in zip(jumps, bounds))
    max_dev = max(dev) if dev else 0.0
    intact = max_dev <= tol and all(c is not None and c[0] == 1 for c in cells)
    return BranchReport(
        list(t_grid), lam, pred, dev, cells, gaps, jumps, bounds, max_dev, continuity_ok, intact, tol
    )


def lambda1_functional(t, L=4, n=3, volume=None):
    """``lambda1 * vol^(2/n)`` for the Berger metric on S^3.

    ``volume`` defaults to the closed form ``sqrt(1+t) vol(S^3)``; pass a
    quadrature estimate to use that instead.
    """
    if n != 3:
        raise ValueError("spectra are only computed on S^3")
    lam = spectrum(L, t).lambda1
    vol = math.sqrt(1.0 + t) * VOL_S3 if volume is None else volume
    return lam * vol ** (2.0 / n)


def predicted_functional(t, n=3):
    return predicted_lambda1(t, n) * (1.0 + t) ** (1.0 / n) * VOL_S3 ** (2.0 / n)


# --------------------------------------------------------------------------
# Quadrature Galerkin


def _monomial_values(X, monos):
    E = np.array(monos)  # (nm, 4)
    return np.prod(X[:, None, :] ** E[None, :, :], axis=2)


def _monomial_gradients(X, monos):
    """``out[p, m, i] = d_i x^monos[m]`` at ``X[p]``."""
    E = np.array(monos)
    out = np.zeros((X.shape[0], len(monos), 4))
    for i in range(4):
        Ei = E.copy()
        coef = Ei[:, i].astype(float)
        Ei[:, i] = np.maximum(Ei[:, i] - 1, 0)
        out[:, :, i] = coef[None, :] * np.prod(X[:, None, :] ** Ei[None, :, :], axis=2)
    return out


def quadrature_matrices(L, t, N=1 << 16, seed=0):
    """Stiffness and mass matrices of the deformed metric on harmonics of degree <= L."""
    if N < 1 << 14:
        raise ValueError("quadrature needs N >= 2^14")
    s = deformation_factor(t, QUADRATURE_T_MIN)
    X = sphere_points(N, 4, seed)
    Y = X @ hopf_matrix(3).T
    phis, grads = [], []
    for l in range(L + 1):
        block = build_harmonic_basis(l)
        phis.append(_monomial_values(X, block.monomials) @ block.coeffs)
        g = np.einsum("pmi,ma->pai", _monomial_gradients(X, block.monomials), block.coeffs)
        # tangential part of the ambient gradient
        g = g - np.einsum("pa,pi->pai", np.einsum("pai,pi->pa", g, X), X)
        grads.append(g)
    phi = np.concatenate(phis, axis=1)
    grad = np.concatenate(grads, axis=1)
    ydphi = np.einsum("pai,pi->pa", grad, Y)
    weight = VOL_S3 * math.sqrt(1.0 + t) / N
    stiff = weight * (np.einsum("pai,pbi->ab", grad, grad) - s * ydphi.T @ ydphi)
    mass = weight * phi.T @ phi
    return 0.5 * (stiff + stiff.T), 0.5 * (mass + mass.T)


def quadrature_rayleigh_spectrum(L, t, N=1 << 16, seed=0):
    stiff, mass = quadrature_matrices(L, t, N, seed)
    try:
        np.linalg.cholesky(mass)
    except np.linalg.LinAlgError as exc:
        raise QuadratureRankError(f"mass matrix not positive definite with N = {N}") from exc
    eig = np.sort(scipy.linalg.eigh(stiff, mass, eigvals_only=True))
    positive = eig[1:]
    clusters = cluster(eig, QUADRATURE_CLUSTER_RTOL)
    return SpectrumResult(float(t), L, eig, "quadrature", float(positive.min()), clusters)
