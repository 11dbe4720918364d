import math

import numpy as np
import pytest

from bergerspec.errors import InvalidPointError
from bergerspec.sphere import (
    VOL_S3,
    VOL_S5,
    BergerFamily,
    CoordinateEigenfunction,
    RoundSphere,
    berger_metric,
    chart_discrepancy,
    eigenfunction_check,
    hopf_field_at,
    hopf_matrix,
    round_volume,
    volume,
)


def test_volume_constants():
    assert VOL_S3 == pytest.approx(19.7392088, rel=1e-8)
    assert VOL_S5 == pytest.approx(31.0062767, rel=1e-8)
    assert round_volume(7) == pytest.approx(math.pi ** 4 / 3)


def test_rejects_even_or_small_dimension():
    for n in (1, 2, 4):
        with pytest.raises(ValueError):
            RoundSphere(n)


def test_hopf_field_formula():
    x = np.array([0.5, 0.5, 0.5, 0.5])
    assert np.allclose(hopf_field_at(3, x), [-0.5, 0.5, -0.5, 0.5])
    with pytest.raises(InvalidPointError):
        hopf_field_at(3, np.array([1.0, 1.0, 0.0, 0.0]))
    J = hopf_matrix(5)
    assert np.allclose(J @ J, -np.eye(6))


def test_chart_round_trip(s3):
    for X in np.eye(4):
        p = s3.point(X)
        assert np.allclose(s3.embed(p), X, atol=1e-15)
    with pytest.raises(InvalidPointError):
        s3.point(np.array([0.0, 0.0, 0.0, 1.0]), chart=0)


def test_pullback_matches_analytic_metric(s5):
    for p in s5.sample_points(10, seed=1):
        assert np.allclose(s5.pullback_metric(p), s5.metric.metric(p), atol=1e-14)


def test_hopf_field_pushes_to_ambient_formula(s3):
    for p in s3.sample_points(10, seed=2):
        X = s3.embed(p)
        assert np.allclose(s3.ambient_vector(s3.hopf_field(), p), hopf_field_at(3, X), atol=1e-13)


@pytest.mark.parametrize("n,t", [(3, 0.0), (3, 3.0), (5, 0.5)])
def test_volume_examples(n, t):
    sphere = RoundSphere(n)
    rep = volume(berger_metric(sphere, t), sphere, N=1 << 14)
    assert rep.estimate == pytest.approx(math.sqrt(1 + t) * round_volume(n), rel=5e-3)
    assert rep.error_estimate < 1e-10
    assert set(rep.to_dict()) >= {"estimate", "expected", "rel_error", "error_estimate"}


def test_volume_rejects_small_sample(s3):
    with pytest.raises(ValueError):
        volume(berger_metric(s3, 1.0), s3, N=1000)


@pytest.mark.parametrize("n", [3, 5])
@pytest.mark.parametrize("t", [-0.9, 1.0, 10.0])
def test_coordinate_eigenfunctions(n, t):
    sphere = RoundSphere(n)
    samples = sphere.sample_points(20, seed=3)
    dm = berger_metric(sphere, t)
    for axis in (1, n + 1):
        u = CoordinateEigenfunction(axis, sphere)
        assert eigenfunction_check(u, dm, samples) < 1e-9
        assert u.hessian_residual(samples) < 1e-12


def test_weight_zero_quadratic_keeps_round_eigenvalue(s3):
    # x1^2 + x2^2 - x3^2 - x4^2 is annihilated by the Hopf field, so it stays at -8
    D = np.diag([1.0, 1.0, -1.0, -1.0])
    u = s3.ambient_scalar(lambda X: float(X @ D @ X), lambda X: 2 * D @ X, lambda X: 2 * D)
    samples = s3.sample_points(20, seed=4)
    for t in (-0.9, 0.0, 5.0):
        assert eigenfunction_check(u, berger_metric(s3, t), samples, eigenvalue=-8.0) < 1e-9


def test_non_eigenfunction_is_detected(s3):
    # (x1)^2 - 1/4 is not an eigenfunction on S^3
    e = np.zeros((4, 4))
    e[0, 0] = 1.0
    u = s3.ambient_scalar(lambda X: X[0] ** 2 - 0.25, lambda X: 2 * e @ X, lambda X: 2 * e)
    assert eigenfunction_check(u, berger_metric(s3, 1.0), s3.sample_points(20), eigenvalue=-8.0) > 0.1


def test_charts_agree(s3):
    u = s3.coordinate_function(3)
    dm = berger_metric(s3, 2.0)
    X = np.array([0.6, 0.0, 0.0, 0.8])
    d_ratio, d_lap = chart_discrepancy(s3, dm, u, X)
    assert d_ratio < 1e-12 and d_lap < 1e-12


def test_family_over_default_grid(s3):
    fam = BergerFamily(s3)
    assert len(fam) == 8
    assert [m.t for m in fam][0] == -0.9
