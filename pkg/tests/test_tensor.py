import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergerspec.errors import KillingPreconditionError, SingularDeformationError
from bergerspec.sphere import RoundSphere, berger_metric
from bergerspec.tensor import (
    ChartPoint,
    ChartedMetric,
    ChartedVectorField,
    DeformedMetric,
    ResidualReport,
    bianchi_residual,
    certify_killing,
    christoffel,
    christoffel_delta_bruteforce,
    covariant_hessian,
    deformed_christoffel_delta,
    euclidean_metric,
    inverse_deformed_metric,
    killing_report,
    laplace_beltrami,
    riemann,
    sasaki_residual,
    sectional_curvature,
    trace_residuals,
    verify_deformed_laplacian,
)

from conftest import cubic_field


def conformal_christoffel(x):
    """Christoffel symbols of ``4/(1+|x|^2)^2 delta`` from the conformal-factor formula."""
    n = len(x)
    dlog = -4.0 * x / (1.0 + x @ x)  # d_k log(phi)
    eye = np.eye(n)
    return 0.5 * (
        np.einsum("ki,j->kij", eye, dlog) + np.einsum("kj,i->kij", eye, dlog) - np.einsum("ij,k->kij", eye, dlog)
    )


def test_inverse_closed_form_matches_numeric(s3):
    for t in (-0.9, 0.5, 10.0):
        dm = berger_metric(s3, t)
        for p in s3.sample_points(10, seed=1):
            inv = inverse_deformed_metric(dm, p)
            assert np.allclose(inv @ dm.metric(p), np.eye(3), atol=1e-12)
            assert np.allclose(inv, np.linalg.inv(dm.metric(p)), atol=1e-10)


def test_berger_rejects_degenerate_t(s3):
    with pytest.raises(SingularDeformationError) as err:
        berger_metric(s3, -1.0)
    assert err.value.t == -1.0


def test_inverse_raises_on_vanishing_denominator():
    # constant field of length 2 on flat R^3 with t = -1/4 makes 1 + t|Y|^2 = 0
    Y = ChartedVectorField(3, lambda p: np.array([2.0, 0.0, 0.0]), lambda p: np.zeros((3, 3)))
    dm = DeformedMetric(euclidean_metric(3), Y, -0.25)
    with pytest.raises(SingularDeformationError):
        inverse_deformed_metric(dm, ChartPoint(0, np.zeros(3)))


@settings(max_examples=40, deadline=None)
@given(
    t=st.floats(min_value=-0.95, max_value=50.0),
    x=st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=3, max_size=3),
)
def test_inverse_property(t, x):
    sphere = RoundSphere(3)
    dm = berger_metric(sphere, t)
    p = ChartPoint(0, np.array(x))
    prod = inverse_deformed_metric(dm, p) @ dm.metric(p)
    assert np.max(np.abs(prod - np.eye(3))) < 1e-9


def test_christoffel_euclidean_is_zero():
    m = euclidean_metric(4)
    assert np.all(christoffel(m, ChartPoint(0, np.ones(4))) == 0.0)


@pytest.mark.parametrize("n", [3, 5])
def test_christoffel_conformal_oracle(n):
    sphere = RoundSphere(n)
    for p in sphere.sample_points(20, seed=n):
        assert np.allclose(christoffel(sphere.metric, p), conformal_christoffel(p.coords), atol=1e-13)


def test_round_sphere_curvature_is_one(s3):
    rng = np.random.default_rng(0)
    for p in s3.sample_points(10, seed=2):
        a, b = rng.normal(size=(2, 3))
        assert sectional_curvature(s3.metric, p, a, b) == pytest.approx(1.0, abs=1e-11)
        assert bianchi_residual(s3.metric, p) < 1e-11


def test_riemann_antisymmetry(s3):
    r = riemann(s3.metric, s3.sample_points(1, seed=3)[0])
    assert np.allclose(r, -np.swapaxes(r, 2, 3), atol=1e-13)


def test_fd_christoffel_converges_second_order(s3):
    p = s3.sample_points(1, seed=4)[0]
    exact = christoffel(s3.metric, p)
    errs = []
    for h in (4e-2, 2e-2, 1e-2):
        fd = ChartedMetric(3, s3.metric.metric, h=h)
        errs.append(float(np.max(np.abs(christoffel(fd, p) - exact))))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.9, (errs, orders)


def test_coordinate_function_hessian_and_laplacian(s3):
    u = s3.coordinate_function(2)
    for p in s3.sample_points(20, seed=5):
        g = s3.metric.metric(p)
        assert np.allclose(covariant_hessian(u, s3.metric, p), -g * u.value(p), atol=1e-12)
        assert laplace_beltrami(u, s3.metric, p) == pytest.approx(-3 * u.value(p), abs=1e-12)


def test_hopf_field_killing_report(s3, s5):
    for sphere in (s3, s5):
        rep = killing_report(sphere.hopf_field(), sphere.metric, sphere.sample_points(30, seed=6))
        assert rep.passes(1e-12)
        assert rep.samples == 30


def test_generic_linear_field_is_killing_but_not_unit(s3):
    rng = np.random.default_rng(8)
    A = rng.normal(size=(4, 4))
    A = A - A.T
    rep = killing_report(s3.linear_field(A), s3.metric, s3.sample_points(30, seed=7))
    assert rep.max_sym_residual < 1e-12 and rep.max_div < 1e-12
    assert rep.length_variation > 1e-2
    assert not rep.passes(1e-9)


def test_gradient_field_fails_killing_precondition(s3):
    u = s3.coordinate_function(1)
    dm = DeformedMetric(s3.metric, s3.gradient_field(u), 0.5)
    samples = s3.sample_points(10, seed=9)
    with pytest.raises(KillingPreconditionError) as err:
        certify_killing(dm, samples)
    assert err.value.residual > 1.0
    with pytest.raises(KillingPreconditionError):
        deformed_christoffel_delta(dm, samples[0])
    with pytest.raises(KillingPreconditionError):
        verify_deformed_laplacian(dm, u, samples)


@pytest.mark.parametrize("t", [-0.9, 1.0, 100.0])
def test_closed_form_christoffel_and_traces(s5, t):
    dm = berger_metric(s5, t)
    for p in s5.sample_points(10, seed=10):
        diff = deformed_christoffel_delta(dm, p) - christoffel_delta_bruteforce(dm, p)
        assert np.max(np.abs(diff)) < 1e-8
        assert max(trace_residuals(dm, p)) < 1e-10


def test_lemma_at_t_zero_is_trivial(s3):
    u = cubic_field(s3)
    assert verify_deformed_laplacian(berger_metric(s3, 0.0), u, s3.sample_points(20)) < 1e-12


def test_lemma_with_finite_difference_metric(s3):
    fd_metric = ChartedMetric(3, s3.metric.metric)
    field = s3.hopf_field()
    dm = DeformedMetric(fd_metric, field, 1.0, unit_length=True)
    u = cubic_field(s3)
    assert verify_deformed_laplacian(dm, u, s3.sample_points(10, seed=12)) < 1e-4


def test_sasaki_holds_on_round_sphere(s3):
    pairs = [(np.eye(3)[i], np.eye(3)[j]) for i in range(3) for j in range(3)]
    assert sasaki_residual(s3.metric, s3.hopf_field(), s3.sample_points(10), pairs) < 1e-12


def test_sasaki_fails_for_flat_metric():
    # a constant unit field on flat space is Killing of constant length but not Sasakian
    Y = ChartedVectorField(3, lambda p: np.array([1.0, 0.0, 0.0]), lambda p: np.zeros((3, 3)))
    pts = [ChartPoint(0, np.zeros(3))]
    a, b = np.array([0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0])
    assert sasaki_residual(euclidean_metric(3), Y, pts, [(a, b)]) == pytest.approx(1.0)


def test_residual_report_schema():
    rep = ResidualReport("lemma", 5, {"max": 1e-13}, 1e-7, True)
    out = json.loads(rep.to_json())
    assert set(out) == {"check", "samples", "residuals", "tolerance", "pass"}
    assert out["pass"] is True
