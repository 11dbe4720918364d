import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergerspec.errors import SingularDeformationError
from bergerspec.spectral import (
    assemble_block_operator,
    build_harmonic_basis,
    cluster,
    lambda1_branch,
    lambda1_functional,
    predicted_lambda1,
    quadrature_matrices,
    quadrature_rayleigh_spectrum,
    spectra_to_csv,
    spectrum,
    sphere_moment,
    weight_pattern,
)


def expected_pattern(l):
    """|weight| k > 0 has multiplicity 2(l+1); weight 0 has l+1 (even l only)."""
    out = {k: 2 * (l + 1) for k in range(l % 2 or 2, l + 1, 2)}
    if l % 2 == 0:
        out[0] = l + 1
    return out


def test_sphere_moments():
    assert sphere_moment((0, 0, 0, 0)) == 2
    assert sphere_moment((2, 0, 0, 0)) == Fraction(1, 2)
    assert sphere_moment((2, 2, 0, 0)) == Fraction(1, 12)
    assert sphere_moment((1, 0, 0, 0)) == 0


@pytest.mark.parametrize("l", range(7))
def test_block_dimension_and_weights(l):
    block = build_harmonic_basis(l)
    assert block.dim == (l + 1) ** 2
    assert weight_pattern(block) == expected_pattern(l)


def test_basis_orthonormal_under_quadrature():
    from bergerspec.spectral import _monomial_values
    from bergerspec.sampling import sphere_points

    block = build_harmonic_basis(2)
    X = sphere_points(1 << 15, 4, 0)
    phi = _monomial_values(X, block.monomials) @ block.coeffs
    gram = 2 * math.pi ** 2 * phi.T @ phi / len(X)
    assert np.allclose(gram, np.eye(9), atol=2e-2)


def test_degree_one_block_at_t_one():
    ev = np.linalg.eigvalsh(assemble_block_operator(build_harmonic_basis(1), 1.0))
    assert np.allclose(ev, 2.5)


def test_degree_two_block_at_t_one():
    ev = np.sort(np.linalg.eigvalsh(assemble_block_operator(build_harmonic_basis(2), 1.0)))
    assert np.allclose(ev, [6.0] * 6 + [8.0] * 3, atol=1e-12)


def test_round_spectrum():
    res = spectrum(3, 0.0)
    assert res.clusters == pytest.approx([(0.0, 1), (3.0, 4), (8.0, 9), (15.0, 16)])
    assert res.lambda1 == 3.0 and res.lambda1_cell == (1, 1)


@pytest.mark.parametrize("t", [-0.5, 0.0, 1.0, 3.0, 100.0])
def test_lambda1_law_where_degree_one_is_lowest(t):
    res = spectrum(4, t)
    assert res.lambda1 == pytest.approx(predicted_lambda1(t), abs=1e-9)
    assert res.lambda1_cell == (1, 1)


@pytest.mark.parametrize("t", [-0.9, -0.99])
def test_weight_zero_quadratic_takes_over_near_minus_one(t):
    res = spectrum(4, t)
    assert res.lambda1 == pytest.approx(8.0, abs=1e-9)
    assert res.lambda1_cell == (2, 0)
    assert predicted_lambda1(t) > 8.0


def test_crossing_at_minus_five_sixths():
    assert predicted_lambda1(-5 / 6) == pytest.approx(8.0)
    assert spectrum(4, -0.8).lambda1_cell == (1, 1)
    assert spectrum(4, -0.85).lambda1_cell == (2, 0)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(min_value=-0.8, max_value=1e4))
def test_lambda1_property(t):
    assert spectrum(2, t).lambda1 == pytest.approx(predicted_lambda1(t), abs=1e-9)


def test_spectrum_argument_checks():
    with pytest.raises(ValueError):
        spectrum(1, 0.0)
    with pytest.raises(SingularDeformationError):
        spectrum(2, -1.0)
    with pytest.raises(ValueError):
        build_harmonic_basis(9)


def test_cluster():
    assert cluster([1.0, 1.0 + 1e-9, 2.0], 1e-6) == [(pytest.approx(1.0), 2), (2.0, 1)]


def test_csv_output_is_stable():
    text = spectra_to_csv([spectrum(2, 1.0)])
    lines = text.splitlines()
    assert lines[0] == "t,k,lambda_k,multiplicity,method"
    assert lines[2] == "1.0,1,2.5,4,exact_block"


def test_branch_on_grid_without_crossing():
    rep = lambda1_branch((-0.5, 0.0, 0.5, 1.0, 3.0, 10.0, 100.0))
    assert rep.branch_intact and rep.continuity_ok
    assert rep.max_deviation < 1e-12


def test_branch_flags_the_crossing():
    rep = lambda1_branch((-0.99, -0.9, -0.5))
    assert not rep.branch_intact
    assert rep.cells[:2] == [(2, 0), (2, 0)]
    assert rep.continuity_ok


def test_functional_values():
    base = (2 * math.pi ** 2) ** (2 / 3)
    assert lambda1_functional(0.0) == pytest.approx(3 * base, rel=1e-12)
    assert lambda1_functional(0.0) == pytest.approx(21.92, abs=0.01)
    assert lambda1_functional(7.0) == pytest.approx(2.125 * 2 * base, rel=1e-12)


def test_quadrature_mass_matrix_scales_with_volume():
    _, mass = quadrature_matrices(1, 3.0, N=1 << 14)
    assert np.allclose(mass, 2.0 * np.eye(5), atol=2e-2)


def test_quadrature_agrees_with_exact():
    exact = spectrum(2, 1.0).eigenvalues
    quad = quadrature_rayleigh_spectrum(2, 1.0, N=1 << 15).eigenvalues
    assert np.allclose(quad[1:], exact[1:], rtol=1e-2)


def test_quadrature_refuses_too_few_points_and_singular_t():
    with pytest.raises(ValueError):
        quadrature_matrices(2, 0.0, N=1000)
    with pytest.raises(SingularDeformationError):
        quadrature_matrices(2, -0.95)
