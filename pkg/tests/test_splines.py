import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_basis_row, random_collocation
from mlspia.iterate import curve_problem, direct_ls
from mlspia.params import chord_params
from mlspia.spectral import extreme_singular_values
from mlspia.splines import (
    KnotVector,
    collocate,
    curvature_samples,
    eval_basis,
    eval_curve,
    eval_surface,
    make_knots,
    uniform_knots,
)

LINEAR = KnotVector(1, [0.0, 0.0, 1.0, 1.0])
CUBIC_UNIFORM = uniform_knots(7, 3)


def test_knot_vector_rejects_unclamped():
    with pytest.raises(ValueError):
        KnotVector(2, [0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        KnotVector(1, [0.0, 0.0, 0.7, 0.5, 1.0, 1.0])


def test_eval_basis_linear_endpoint():
    # indices are zero-based
    assert eval_basis(LINEAR, 0.0) == [(0, 1.0)]
    assert eval_basis(LINEAR, 1.0) == [(1, 1.0)]


def test_eval_basis_linear_midpoint():
    assert eval_basis(LINEAR, 0.5) == [(0, 0.5), (1, 0.5)]


@pytest.mark.parametrize("t", [0.0, 0.13, 0.5, 0.61, 0.999, 1.0])
def test_eval_basis_matches_recursive_definition(t):
    expected = dense_basis_row(CUBIC_UNIFORM, t)
    got = np.zeros(CUBIC_UNIFORM.n)
    for i, v in eval_basis(CUBIC_UNIFORM, t):
        got[i] = v
    np.testing.assert_allclose(got, expected, atol=1e-15)


def test_eval_basis_domain_error():
    with pytest.raises(ValueError):
        eval_basis(CUBIC_UNIFORM, 1.5)
    with pytest.raises(ValueError):
        eval_basis(CUBIC_UNIFORM, -1e-9)


def test_partition_of_unity_and_local_support():
    rng = np.random.default_rng(3)
    kv = make_knots(np.linspace(0, 1, 40), 15, 3)
    for t in rng.uniform(0, 1, 1000):
        vals = eval_basis(kv, t)
        assert len(vals) <= kv.degree + 1
        s = sum(v for _, v in vals)
        assert 1 - 1e-12 <= s <= 1 + 1e-12
        assert all(v >= 0 for _, v in vals)


def test_make_knots_bezier_case():
    kv = make_knots(np.linspace(0, 1, 9), 4, 3)
    np.testing.assert_array_equal(kv.knots, [0, 0, 0, 0, 1, 1, 1, 1])


def test_make_knots_single_interior_by_hand():
    # d = 11 / 2 = 5.5, i = 5, a = 0.5 -> (t_5 + t_6) / 2 with t_k = (k - 1) / 10
    t = np.linspace(0, 1, 11)
    kv = make_knots(t, 5, 3)
    np.testing.assert_allclose(kv.interior, [0.45], rtol=0, atol=1e-15)
    B = collocate(kv, t).toarray()
    assert np.all(B.sum(axis=0) > 0)


def test_make_knots_example3_structure(example3):
    (kv,) = example3.knots
    assert kv.n == 50 and kv.knots.size == 54
    inner = kv.interior
    assert inner.size == 46
    assert np.all((inner > 0) & (inner < 1))
    assert np.all(np.diff(kv.knots) >= 0)


@pytest.mark.parametrize("n,m", [(3, 10), (12, 11)])
def test_make_knots_invalid(n, m):
    with pytest.raises(ValueError):
        make_knots(np.linspace(0, 1, m), n, 3)


def test_collocate_hat_functions():
    B = collocate(LINEAR, [0.0, 0.5, 1.0]).toarray()
    np.testing.assert_array_equal(B, [[1, 0], [0.5, 0.5], [0, 1]])


def test_collocate_rows_match_eval_basis():
    kv = make_knots(np.linspace(0, 1, 30), 9, 3)
    t = np.sort(np.random.default_rng(1).uniform(0, 1, 50))
    B = collocate(kv, t).toarray()
    for j, tj in enumerate(t):
        row = np.zeros(kv.n)
        for i, v in eval_basis(kv, tj):
            row[i] = v
        assert np.array_equal(B[j], row)


def test_collocate_example3(example3):
    (B,) = example3.bases
    assert B.shape == (501, 50)
    assert np.diff(B.indptr).max() <= 4
    np.testing.assert_allclose(np.asarray(B.sum(axis=1)).ravel(), 1.0, atol=1e-12)
    assert extreme_singular_values(B, 1e-10).rank == 50


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_collocate_partition_of_unity_random(seed):
    rng = np.random.default_rng(seed)
    B, kv, t = random_collocation(rng)
    rows = np.asarray(B.sum(axis=1)).ravel()
    np.testing.assert_allclose(rows, 1.0, atol=1e-12)
    assert B.data.min() >= 0
    assert np.all(np.asarray(B.sum(axis=0)).ravel() > 0)


def test_eval_curve_constant_and_linear():
    kv = uniform_knots(6, 3)
    q = np.array([2.0, -1.0])
    C = eval_curve(np.tile(q, (6, 1)), kv, np.linspace(0, 1, 17))
    np.testing.assert_allclose(C, np.tile(q, (17, 1)), atol=1e-14)
    np.testing.assert_allclose(eval_curve([[0, 0], [1, 0]], LINEAR, 0.5), [0.5, 0.0])


def test_eval_curve_matches_dense_row():
    rng = np.random.default_rng(7)
    kv = uniform_knots(8, 3)
    P = rng.normal(size=(8, 3))
    for t in rng.uniform(0, 1, 20):
        np.testing.assert_allclose(eval_curve(P, kv, t), dense_basis_row(kv, t) @ P, atol=1e-13)


def test_eval_curve_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_curve(np.zeros((5, 2)), uniform_knots(6, 3), 0.3)


def test_eval_surface_constant_and_bilinear():
    kv = uniform_knots(5, 3)
    q = np.array([1.0, 2.0, 3.0])
    net = np.broadcast_to(q, (5, 5, 3))
    np.testing.assert_allclose(eval_surface(net, kv, kv, 0.3, 0.8), q, atol=1e-14)
    corners = np.array([[[0, 0, 1.0], [0, 1, 2.0]], [[1, 0, 3.0], [1, 1, 7.0]]])
    np.testing.assert_allclose(eval_surface(corners, LINEAR, LINEAR, 0.5, 0.5), corners.mean(axis=(0, 1)))


def test_eval_surface_matches_kronecker():
    rng = np.random.default_rng(11)
    ku, kv = uniform_knots(4, 3), uniform_knots(4, 2)
    net = rng.normal(size=(4, 4, 3))
    tu, tv = rng.uniform(0, 1, 6), rng.uniform(0, 1, 6)
    S = eval_surface(net, ku, kv, tu, tv)
    K = np.kron(collocate(ku, tu).toarray(), collocate(kv, tv).toarray())
    expected = (K @ net.reshape(16, 3)).reshape(6, 6, 3)
    np.testing.assert_allclose(S, expected, atol=1e-12)


def test_eval_surface_shape_mismatch():
    kv = uniform_knots(4, 3)
    with pytest.raises(ValueError):
        eval_surface(np.zeros((4, 5, 3)), kv, kv, 0.5, 0.5)


def test_curvature_straight_line():
    kv = uniform_knots(6, 3)
    P = np.column_stack([np.linspace(0, 5, 6) ** 1.5, 2 * np.linspace(0, 5, 6) ** 1.5])
    for _, _, kappa in curvature_samples(P, kv, 25):
        assert kappa == pytest.approx(0.0, abs=1e-10)


def test_curvature_of_circle_fit():
    R = 2.5
    theta = np.linspace(0, 1.5 * np.pi, 200)
    Q = R * np.column_stack([np.cos(theta), np.sin(theta)])
    problem = curve_problem(Q, 20)
    P = direct_ls(problem)
    samples = curvature_samples(P, problem.knots[0], 50)
    for t, pt, kappa in samples[5:-5]:
        assert kappa == pytest.approx(1 / R, rel=0.05)
        assert np.linalg.norm(pt) == pytest.approx(R, rel=1e-3)


def test_curvature_against_finite_differences():
    rng = np.random.default_rng(5)
    kv = make_knots(np.linspace(0, 1, 30), 8, 3)
    P = rng.normal(size=(8, 2))
    samples = curvature_samples(P, kv, 11)
    h = 1e-5
    for t, _, kappa in samples[1:-1]:
        c0, cp, cm = (eval_curve(P, kv, x) for x in (t, t + h, t - h))
        d1 = (cp - cm) / (2 * h)
        d2 = (cp - 2 * c0 + cm) / h**2
        fd = abs(d1[0] * d2[1] - d1[1] * d2[0]) / np.linalg.norm(d1) ** 3
        assert kappa == pytest.approx(fd, rel=1e-4)


def test_curvature_flags_zero_speed():
    kv = uniform_knots(4, 3)
    P = np.zeros((4, 2))
    assert all(k is None for _, _, k in curvature_samples(P, kv, 5))


def test_curvature_degree_one_rejected():
    with pytest.raises(ValueError):
        curvature_samples([[0, 0], [1, 1]], LINEAR, 5)


def test_chord_then_collocate_columns_nonzero():
    rng = np.random.default_rng(9)
    Q = np.cumsum(rng.uniform(0.1, 1.0, (80, 2)), axis=0)
    t = chord_params(Q)
    for n in (4, 10, 40, 80):
        B = collocate(make_knots(t, n, 3), t)
        assert np.all(np.asarray(B.sum(axis=0)).ravel() > 0)
