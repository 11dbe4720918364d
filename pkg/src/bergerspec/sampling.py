"""Seeded low-discrepancy point sets on the unit sphere S^n."""

import numpy as np
from scipy.stats import qmc, norm


def sphere_points(n_points, ambient_dim, seed=0):
    """Quasi-uniform points on the unit sphere in R^ambient_dim.

    A scrambled Sobol sequence is pushed through the inverse Gaussian CDF and
    normalized; the direction of a standard Gaussian vector is uniform on the
    sphere, so averages over these points estimate sphere averages.
    """
    sampler = qmc.Sobol(d=ambient_dim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(n_points, 2))))
    u = sampler.random_base2(m)[:n_points]
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    z = norm.ppf(u)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def unit_vectors(n_points, dim, seed=0):
    """Pseudo-random Gaussian vectors, used as trial tangent vectors."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_points, dim))
