import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sinkhorn_geometry.core import (
    Measure,
    SignedVector,
    TangentVector,
    build_space,
    center,
    cross_cost,
    dirac,
    mmd_sq,
    point_measure,
    rescale,
    rkhs_inner,
    translate,
    uniform,
)
from sinkhorn_geometry.errors import (
    IncompatibleSpaces,
    InputError,
    InvalidMeasure,
    NegativeCost,
    NonPositiveEpsilon,
    NonSymmetricCost,
    UnbalancedTangent,
)


def test_single_point_space_has_unit_gibbs():
    space = build_space([0.0], "sqeuclidean", 1.0)
    assert space.n == 1
    assert space.gibbs.tolist() == [[1.0]]


def test_two_point_space_cost_and_gibbs():
    space = build_space([0.0, 1.0], "sqeuclidean", 1.0)
    assert np.array_equal(space.cost, [[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(space.gibbs, [[1.0, np.exp(-1)], [np.exp(-1), 1.0]], rtol=0, atol=1e-16)


def test_symmetric_pair_gibbs_entry():
    space = build_space([[-1.0], [1.0]], "sqeuclidean", 1.0)
    assert space.gibbs[0, 1] == pytest.approx(np.exp(-4.0), rel=1e-15)
    assert space.gibbs[0, 1] == pytest.approx(0.0183156, abs=1e-7)


def test_sqeuclidean_diagonal_is_exactly_zero():
    rng = np.random.default_rng(0)
    space = build_space(rng.normal(size=(7, 3)) * 1e3, "sqeuclidean", 0.5)
    assert np.all(np.diag(space.cost) == 0.0)
    assert np.all(np.diag(space.gibbs) == 1.0)
    assert np.array_equal(space.cost, space.cost.T)


def test_build_space_rejects_bad_input():
    with pytest.raises(NonPositiveEpsilon):
        build_space([0.0, 1.0], "sqeuclidean", 0.0)
    with pytest.raises(NonPositiveEpsilon):
        build_space([0.0, 1.0], "sqeuclidean", -1.0)
    with pytest.raises(NonSymmetricCost):
        build_space(None, [[0.0, 1.0], [2.0, 0.0]], 1.0)
    with pytest.raises(NegativeCost):
        build_space(None, [[0.0, -1.0], [-1.0, 0.0]], 1.0)
    with pytest.raises(InputError):
        build_space(None, "sqeuclidean", 1.0)
    with pytest.raises(InputError):
        build_space([0.0], "manhattan", 1.0)


def test_explicit_cost_non_psd_warns():
    # three points where the Gibbs matrix has a negative eigenvalue
    c = np.array([[0.0, 0.0, 10.0], [0.0, 0.0, 0.0], [10.0, 0.0, 0.0]])
    with pytest.warns(UserWarning, match="positive semidefinite"):
        build_space(None, c, 1.0, check_psd=True)


def test_measure_validation():
    space = build_space([0.0, 1.0], "sqeuclidean", 1.0)
    with pytest.raises(InvalidMeasure):
        Measure(space, [0.6, 0.6])
    with pytest.raises(InvalidMeasure):
        Measure(space, [1.5, -0.5])
    with pytest.raises(InputError):
        Measure(space, [1.0])
    mu = Measure.normalized(space, [2.0, 6.0])
    assert mu.weights.tolist() == [0.25, 0.75]
    with pytest.raises(InvalidMeasure):
        Measure.normalized(space, [2.0, 6.0], rtol=1e-6)


def test_measures_are_immutable():
    mu = uniform(build_space([0.0, 1.0], "sqeuclidean", 1.0))
    with pytest.raises(ValueError):
        mu.weights[0] = 0.3


def test_tangent_must_balance():
    space = build_space([0.0, 1.0, 2.0], "sqeuclidean", 1.0)
    with pytest.raises(UnbalancedTangent):
        TangentVector(space, [1.0, 0.0, 0.0])
    t = TangentVector.balanced(space, [1.0, 0.0, 0.0])
    assert abs(t.weights.sum()) < 1e-15


def test_mmd_examples():
    one = build_space([0.0], "sqeuclidean", 1.0)
    two = build_space([0.0, 1.0], "sqeuclidean", 1.0)
    assert mmd_sq(np.zeros(2), two) == 0.0
    assert mmd_sq(np.array([1.0]), one) == 1.0
    value = mmd_sq(TangentVector(two, [1.0, -1.0]))
    assert value == pytest.approx(2 - 2 * np.exp(-1), rel=1e-15)
    assert value == pytest.approx(1.26424, abs=1e-5)


def test_rkhs_inner_examples():
    one = build_space([0.0], "sqeuclidean", 1.0)
    two = build_space([0.0, 1.0], "sqeuclidean", 1.0)
    assert rkhs_inner(SignedVector(one, [1.0]), SignedVector(one, [1.0])) == 1.0
    e1, e2 = SignedVector(two, [1.0, 0.0]), SignedVector(two, [0.0, 1.0])
    assert rkhs_inner(e1, e2) == pytest.approx(np.exp(-1), rel=1e-15)
    with pytest.raises(IncompatibleSpaces):
        rkhs_inner(e1, SignedVector(build_space([0.0, 2.0], "sqeuclidean", 1.0), [1.0, 0.0]))


def test_signed_vector_values_are_kernel_sums():
    space = build_space([0.0, 1.0, 3.0], "sqeuclidean", 2.0)
    w = np.array([0.5, -1.0, 2.0])
    expected = [sum(w[j] * np.exp(-((x - y) ** 2) / 2.0) for j, y in enumerate([0.0, 1.0, 3.0]))
                for x in [0.0, 1.0, 3.0]]
    assert np.allclose(SignedVector(space, w).values, expected, rtol=1e-14)


def test_cross_cost_between_point_spaces():
    a = build_space([0.0, 1.0], "sqeuclidean", 1.0)
    b = build_space([[2.0]], "sqeuclidean", 1.0)
    assert cross_cost(a, b).tolist() == [[4.0], [1.0]]
    with pytest.raises(IncompatibleSpaces):
        cross_cost(a, build_space([[2.0]], "sqeuclidean", 2.0))


def test_measure_helpers():
    space = build_space([0.0, 1.0, 2.0], "sqeuclidean", 1.0)
    assert dirac(space, 1).weights.tolist() == [0.0, 1.0, 0.0]
    mu = point_measure([[0.0], [2.0]], [1.0, 3.0])
    assert mu.mean == pytest.approx([1.5])
    assert center(mu).mean == pytest.approx([0.0], abs=1e-15)
    assert translate(mu, [1.0]).space.points.ravel().tolist() == [1.0, 3.0]
    scaled = rescale(mu, 0.5, 0.25)
    assert scaled.space.epsilon == 0.25
    assert scaled.space.points.ravel().tolist() == [0.0, 1.0]


@given(st.integers(0, 2**32 - 1))
def test_gibbs_positive_semidefinite(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 51))
    space = build_space(rng.random((n, int(rng.integers(1, 4)))) * 2, "sqeuclidean", float(rng.uniform(0.1, 3)))
    assert np.linalg.eigvalsh(space.gibbs).min() >= -1e-10 * n
    assert np.all(space.gibbs > 0) and np.all(space.gibbs <= 1)


@given(st.integers(0, 2**32 - 1))
def test_mmd_is_inner_product_and_translation_invariant(seed):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 12)), int(rng.integers(1, 4))
    pts = rng.random((n, d))
    space = build_space(pts, "sqeuclidean", 0.7)
    a = SignedVector(space, rng.normal(size=n))
    assert mmd_sq(a) == rkhs_inner(a, a)
    moved = build_space(pts + rng.normal(size=d), "sqeuclidean", 0.7)
    assert mmd_sq(a.weights, moved) == pytest.approx(mmd_sq(a), rel=1e-10, abs=1e-12)
    assert mmd_sq(a) >= -1e-12


@given(st.integers(0, 2**32 - 1))
def test_rkhs_inner_symmetric_bilinear(seed):
    rng = np.random.default_rng(seed)
    space = build_space(rng.random((5, 2)), "sqeuclidean", 0.5)
    u, v, w = (rng.normal(size=5) for _ in range(3))
    s = 1.7
    assert rkhs_inner(u, v, space) == pytest.approx(rkhs_inner(v, u, space), rel=1e-13, abs=1e-14)
    lhs = rkhs_inner(u + s * w, v, space)
    rhs = rkhs_inner(u, v, space) + s * rkhs_inner(w, v, space)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
