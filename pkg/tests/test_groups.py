import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bergerspec.errors import NotFiniteError, NotFreeError
from bergerspec.groups import (
    LensAction,
    MatrixAction,
    UnitQuaternion,
    binary_dihedral_group,
    cyclic_group,
    generate_group,
    icosian_relation_residual,
    invariance_residual,
    is_free_action,
    left_matrix,
    load_group,
    load_shipped,
    noninvariance_witness,
    qmul,
    right_matrix,
    shipped_group_names,
    to_quaternion,
)
from bergerspec.sampling import sphere_points
from bergerspec.sphere import berger_metric, hopf_matrix

ORDERS = {
    "binary_icosahedral": 120,
    "binary_octahedral": 48,
    "binary_tetrahedral": 24,
    "binary_dihedral_16": 16,
    "cyclic_5": 5,
    "lens_7_2": 7,
}

unit_quat = st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 0.1)


@settings(max_examples=50, deadline=None)
@given(p=unit_quat, q=unit_quat)
def test_quaternion_matrices(p, q):
    p, q = np.array(p), np.array(q)
    assert np.allclose(left_matrix(p) @ q, qmul(p, q))
    assert np.allclose(right_matrix(q) @ p, qmul(p, q))


def test_hopf_field_is_right_multiplication_by_i():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4)
    i = np.array([0.0, 1.0, 0.0, 0.0])
    got = to_quaternion(hopf_matrix(3) @ x)
    assert np.allclose(got, qmul(to_quaternion(x), i))


def test_left_action_commutes_with_hopf():
    J = hopf_matrix(3)
    for g in load_shipped("binary_octahedral").elements:
        M = g.sphere_matrix()
        assert np.allclose(M @ J, J @ M, atol=1e-14)
        assert np.allclose(M.T @ M, np.eye(4), atol=1e-14)


def test_shipped_orders():
    assert set(shipped_group_names()) == set(ORDERS)
    for name, order in ORDERS.items():
        assert load_shipped(name).order == order


def test_icosian_relations():
    a, b = load_shipped("binary_icosahedral").generators
    assert icosian_relation_residual(a, b) < 1e-14
    assert (a ** 3).distance(UnitQuaternion.from_array([-1, 0, 0, 0])) < 1e-14


def test_group_axioms():
    for name in ("binary_icosahedral", "binary_tetrahedral"):
        assert all(load_shipped(name).axiom_residuals().values())


@pytest.mark.parametrize("m", [1, 2, 5, 12, 24])
def test_cyclic_orders_and_freeness(m):
    G = cyclic_group(m)
    assert G.order == m
    cert = is_free_action(G, sphere_points(500, 4, 0))
    if m > 1:
        assert cert.delta_exact == pytest.approx(2 * math.sin(math.pi / m), rel=1e-12)


@pytest.mark.parametrize("m", [2, 3, 6, 12])
def test_binary_dihedral(m):
    G = binary_dihedral_group(m)
    assert G.order == 4 * m
    assert is_free_action(G, sphere_points(500, 4, 0)).free


def test_all_shipped_free_and_invariant(s3):
    samples = s3.sample_points(8, seed=1)
    X = sphere_points(500, 4, 1)
    for name in ORDERS:
        G = load_shipped(name)
        assert is_free_action(G, X).delta_min > 0.5
        assert invariance_residual(berger_metric(s3, 10.0), G, s3, samples) < 1e-9
        assert invariance_residual(s3.hopf_field(), G, s3, samples) < 1e-9


def test_noninvariance_witness(s3):
    G = load_shipped("binary_icosahedral")
    assert noninvariance_witness(s3.coordinate_function(1), G, s3, s3.sample_points(10)) > 0.1


def test_fixed_circle_rotation_is_not_free():
    c, s = math.cos(2 * math.pi / 5), math.sin(2 * math.pi / 5)
    M = np.eye(4)
    M[:2, :2] = [[c, -s], [s, c]]
    G = MatrixAction(M, name="rotation")
    assert G.order == 5
    with pytest.raises(NotFreeError):
        is_free_action(G, sphere_points(500, 4, 0))


def test_lens_action():
    L = LensAction(7, 2)
    assert L.order == 7
    assert is_free_action(L, sphere_points(500, 4, 0)).free
    with pytest.raises(ValueError):
        LensAction(6, 2)


def test_infinite_generator_hits_cap():
    ang = math.sqrt(2.0)
    with pytest.raises(NotFiniteError):
        generate_group([(math.cos(ang), math.sin(ang), 0.0, 0.0)], cap=500)


def test_load_group_from_file(tmp_path):
    path = tmp_path / "c3.json"
    half = math.sqrt(3) / 2
    path.write_text(json.dumps({"name": "c3", "action": "left_quaternion", "generators": [[-0.5, half, 0, 0]], "order": 3}))
    assert load_group(str(path)).order == 3


def test_load_group_rejects_wrong_order():
    with pytest.raises(ValueError):
        load_group({"name": "x", "action": "left_quaternion", "generators": [[0, 1, 0, 0]], "order": 5})


def test_load_group_rejects_non_unit_generator():
    with pytest.raises(ValueError):
        load_group({"name": "x", "action": "left_quaternion", "generators": [[1, 1, 0, 0]]})


def test_load_group_rejects_unknown_action():
    with pytest.raises(ValueError):
        load_group({"name": "x", "action": "right", "generators": []})
