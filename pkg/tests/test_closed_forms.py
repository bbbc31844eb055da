import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from sinkhorn_geometry import closed_forms as cf
from sinkhorn_geometry.core import Measure, build_space, dirac, point_measure
from sinkhorn_geometry.errors import DegenerateMass, InputError, QuadratureFailure
from sinkhorn_geometry.sinkhorn import ot_eps, sinkhorn_divergence
from sinkhorn_geometry.tensor import fd_horizontal_tensor, metric_tensor, self_transport


def discretized_gaussian(mean, var, eps, n=400):
    sd = np.sqrt(var)
    x = np.linspace(mean - 6 * sd, mean + 6 * sd, n)
    w = np.exp(-0.5 * ((x - mean) / sd) ** 2)
    return point_measure(x[:, None], w / w.sum(), epsilon=eps)


# ------------------------------------------------------------------ Gaussians


def test_gaussian_ot_examples():
    assert cf.gaussian_ot_eps(0.0, 0.0, 1.3) == 0.0
    eps = 2.0
    k = 1 + np.sqrt(2)
    expected = eps / 2 - eps / 2 * (k - np.log(k) + np.log(2) - 2)
    assert cf.gaussian_ot_eps(eps / 4, eps / 4, eps) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("v0,v1,eps", [(0.5, 1.0, 1.0), (0.2, 0.3, 0.5)])
def test_gaussian_ot_matches_discretized_sinkhorn(v0, v1, eps):
    mu, nu = discretized_gaussian(0.0, v0, eps), discretized_gaussian(0.0, v1, eps)
    assert ot_eps(mu, nu, 1e-11) == pytest.approx(cf.gaussian_ot_eps(v0, v1, eps), rel=1e-3)


def test_gaussian_divergence_matches_discretized_sinkhorn():
    eps = 1.0
    g0, g1 = cf.Gaussian1D(0.3, 0.4), cf.Gaussian1D(-0.2, 0.9)
    mu = discretized_gaussian(g0.mean, g0.variance, eps)
    nu = discretized_gaussian(g1.mean, g1.variance, eps)
    assert sinkhorn_divergence(mu, nu, 1e-11) == pytest.approx(cf.gaussian_sinkhorn(g0, g1, eps), rel=1e-3)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 10), st.floats(0.1, 5))
def test_gaussian_divergence_identity_and_translation(m0, m1, v, eps):
    g = cf.Gaussian1D(m0, v)
    assert cf.gaussian_sinkhorn(g, g, eps) == pytest.approx(0.0, abs=1e-12 * max(1, v))
    moved = cf.Gaussian1D(m1, v)
    assert cf.gaussian_sinkhorn(g, moved, eps) == pytest.approx((m0 - m1) ** 2, abs=1e-12 * max(1, v))


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0.1, 5))
def test_gaussian_divergence_nonnegative(v0, v1, eps):
    value = cf.gaussian_sinkhorn(cf.Gaussian1D(0, v0), cf.Gaussian1D(0, v1), eps)
    assert value >= -1e-12 * max(1, v0, v1)


def test_negative_variance_rejected():
    with pytest.raises(InputError):
        cf.Gaussian1D(0.0, -1.0)


def test_gaussian_metric_limits():
    for eps in (0.5, 1.0, 3.0):
        assert cf.gaussian_metric(0.0, eps) == pytest.approx(1 / eps, rel=1e-15)
    v = 1e4
    assert cf.gaussian_metric(v, 1.0) == pytest.approx(1 / (4 * v), rel=1e-8)
    vs = np.linspace(0, 5, 50)
    assert np.all(np.diff(cf.gaussian_metric(vs, 1.0)) < 0)


@pytest.mark.parametrize("v", [0.1, 0.7, 2.0])
def test_gaussian_metric_is_half_hessian_of_divergence(v):
    eps = 1.0
    h = 1e-3 * max(v, eps)

    def div(dv):
        return cf.gaussian_sinkhorn(cf.Gaussian1D(0, v), cf.Gaussian1D(0, v + dv), eps)

    def second(step):
        return (div(step) + div(-step)) / step**2

    richardson = (4 * second(h / 2) - second(h)) / 3
    assert richardson == pytest.approx(2 * cf.gaussian_metric(v, eps), abs=1e-6)


def test_antiderivative_inverse_round_trip():
    for x in (0.0, 1e-6, 0.3, 5.0, 200.0):
        assert cf.antiderivative_inverse(cf.antiderivative(x)) == pytest.approx(x, rel=1e-12, abs=1e-15)
    assert cf.antiderivative_inverse(-cf.antiderivative(2.0)) == pytest.approx(-2.0, rel=1e-12)


def test_antiderivative_reports_quadrature_failure(monkeypatch):
    monkeypatch.setattr(cf, "QUAD_FAIL", 0.0)
    with pytest.raises(QuadratureFailure):
        cf.antiderivative(1e6)


def test_gaussian_geodesic_endpoints_and_constant_path():
    ts = np.linspace(0, 1, 11)
    vt, d = cf.gaussian_geodesic(0.3, 2.0, ts, 1.0)
    assert vt[0] == 0.3 and vt[-1] == 2.0
    vt, d = cf.gaussian_geodesic(0.8, 0.8, ts, 1.0)
    assert d == 0.0 and np.allclose(vt, 0.8, rtol=1e-12)
    with pytest.raises(InputError):
        cf.gaussian_geodesic(0.1, 0.2, 1.5, 1.0)


@pytest.mark.parametrize("v0,v1,eps", [(0.05, 1.0, 1.0), (2.0, 0.1, 1.0), (0.5, 4.0, 0.3)])
def test_gaussian_geodesic_monotone_and_convex(v0, v1, eps):
    vt, _ = cf.gaussian_geodesic(v0, v1, np.linspace(0, 1, 41), eps)
    step = np.diff(vt)
    assert np.all(step * np.sign(v1 - v0) > 0)
    assert np.all(np.diff(vt, 2) >= -1e-12)


@pytest.mark.parametrize("v0,v1,eps", [(0.05, 1.0, 1.0), (0.5, 4.0, 2.0)])
def test_gaussian_geodesic_energy_reintegrates_to_squared_length(v0, v1, eps):
    _, d = cf.gaussian_geodesic(v0, v1, 0.0, eps)
    h = 1e-5

    def integrand(t):
        lo, hi = max(t - h, 0.0), min(t + h, 1.0)
        v_lo, v_hi = cf.gaussian_geodesic(v0, v1, np.array([lo, hi]), eps)[0]
        speed = (v_hi - v_lo) / (hi - lo)
        return cf.gaussian_metric(cf.gaussian_geodesic(v0, v1, t, eps)[0], eps) * speed**2

    energy, _ = integrate.quad(integrand, 0, 1, epsabs=1e-10, limit=100)
    assert energy == pytest.approx(d * d, rel=1e-6)


def test_bridge_variance_between_equal_diracs():
    for eps in (0.5, 2.0):
        assert cf.gaussian_bridge_variance(0, 0, 0.5, eps) == pytest.approx(eps / 8, rel=1e-14)
        assert cf.gaussian_bridge_variance(0.3, 1.0, 0.0, eps) == pytest.approx(0.3)
        assert cf.gaussian_bridge_variance(0.3, 1.0, 1.0, eps) == pytest.approx(1.0)


def test_wasserstein_path_interpolates_standard_deviations():
    assert cf.wasserstein_variance_path(1.0, 4.0, 0.5) == pytest.approx(2.25)


def test_triangle_psi_defect_for_large_variance():
    v = 20.0
    assert cf.triangle_psi(0.0, v) == pytest.approx(0.0, abs=1e-12)
    assert cf.triangle_psi_slope(v) < 0
    x = 1e-6
    assert cf.triangle_psi(x, v) < 0
    assert cf.triangle_psi(x, v) / x == pytest.approx(cf.triangle_psi_slope(v), rel=1e-2)


# ---------------------------------------------------------- symmetric Diracs


def test_two_dirac_values_examples():
    assert cf.two_dirac_values(0.7, 0.7, 1.3)[1] == pytest.approx(0.0, abs=1e-15)
    eps = 2.0
    _, sd = cf.two_dirac_values(np.sqrt(eps), 0.0, eps)
    assert sd / eps == pytest.approx(1 - 0.5 * np.log(2) + 0.5 * np.log1p(np.exp(-4)), rel=1e-14)


@pytest.mark.parametrize("r,s,eps", [(0.5, 1.3, 1.0), (1.0, 0.0, 1.0), (0.2, 0.9, 0.3)])
def test_two_dirac_values_match_generic_solver(r, s, eps):
    pts = sorted({-r, r, -s, s})
    space = build_space(np.array(pts)[:, None], "sqeuclidean", eps)

    def pair(x):
        w = np.zeros(len(pts))
        w[pts.index(-x)] += 0.5
        w[pts.index(x)] += 0.5
        return w

    mu, nu = Measure(space, pair(r)), Measure(space, pair(s))
    ot, sd = cf.two_dirac_values(r, s, eps)
    assert ot_eps(mu, nu, 1e-14) == pytest.approx(ot, abs=1e-10)
    assert sinkhorn_divergence(mu, nu, 1e-14) == pytest.approx(sd, abs=1e-10)


def test_triangle_gap_value_and_scale_invariance():
    gap = cf.triangle_gap(1.0)
    assert gap == pytest.approx(0.093, abs=5e-4)
    assert cf.triangle_gap(0.37) == pytest.approx(gap, abs=1e-9)


def test_triangle_gap_from_generic_solver():
    eps = 1.0
    r = np.sqrt(eps)

    def pair(x):
        return point_measure([[-x], [x]], epsilon=eps) if x > 0 else point_measure([[0.0]], [1.0], eps)

    def root(a, b):
        return np.sqrt(sinkhorn_divergence(pair(a), pair(b), 1e-14))

    gap = (root(0, 2 * r) - root(0, r) - root(r, 2 * r)) / np.sqrt(eps)
    assert gap == pytest.approx(cf.triangle_gap(eps), abs=1e-8)


def test_power_of_divergence_breaks_triangle_on_line():
    space = build_space([0.0, 0.5, 1.0], "sqeuclidean", 0.2)
    d = [dirac(space, i) for i in range(3)]
    s01, s12, s02 = (sinkhorn_divergence(d[i], d[j]) for i, j in ((0, 1), (1, 2), (0, 2)))
    assert (s01, s12, s02) == pytest.approx((0.25, 0.25, 1.0), rel=1e-13)
    for alpha in (0.55, 0.75, 1.0):
        assert s02**alpha > s01**alpha + s12**alpha
    assert s02**0.5 == pytest.approx(s01**0.5 + s12**0.5, rel=1e-13)


# ---------------------------------------------------------------- two-point


def test_two_point_state_invariants():
    for r, m in ((0.1, 0.5), (1.0, 0.2), (3.0, 0.9)):
        s = cf.TwoPointState(r, m, 1.0)
        assert 0 < s.p <= s.M2
        assert 0 <= s.lambda2 < 1
    with pytest.raises(DegenerateMass):
        cf.TwoPointState(1.0, 0.0, 1.0)
    with pytest.raises(DegenerateMass):
        cf.TwoPointState(1.0, 1.0, 1.0)


def test_two_point_tensor_small_distance():
    for m in (0.3, 0.5):
        for r in (1e-2, 1e-3):
            g = cf.two_point_tensor(cf.TwoPointState(r, m, 1.0), 2.0)
            assert g == pytest.approx(4.0 * r * r, rel=10 * r * r)


def test_two_point_tensor_large_distance():
    eps = 1.0
    rests = []
    for r in (3.0, 4.0, 5.0):
        g = cf.two_point_tensor(cf.TwoPointState(r, 0.5, eps), 1.0)
        rests.append(g / (0.5 * eps) - np.exp(r * r / eps))
    # the remainder stays bounded while the leading term grows by e^16
    assert max(abs(x) for x in rests) < 10


def test_two_point_tensor_matches_generic():
    for r, m, eps in ((0.4, 0.25, 1.0), (1.2, 0.7, 0.5)):
        mu = point_measure([[0.0], [r]], [m, 1 - m], epsilon=eps)
        g = metric_tensor(self_transport(mu), [0.6, -0.6])
        assert g == pytest.approx(cf.two_point_tensor(cf.TwoPointState(r, m, eps), 0.6), rel=1e-10)


# -------------------------------------------------------------- nonconvexity


def test_nonconvexity_limits():
    # coincident points: the spreading motion costs nothing
    assert cf.nonconvexity_value(0.0, 1.0) == 0.0
    assert cf.nonconvexity_value(50.0, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_nonconvexity_sign_changes_once_at_threshold():
    for eps in (0.5, 1.0, 3.0):
        r_star = cf.nonconvexity_threshold(eps)
        assert cf.nonconvexity_value(r_star, eps) == pytest.approx(1.0, abs=1e-14)
        # beyond about 2.5 sqrt(eps) the excess over one underflows
        rs = np.linspace(1e-3, 2.5, 801) * np.sqrt(eps)
        above = cf.nonconvexity_value(rs, eps) > 1
        assert np.array_equal(above, rs > r_star)


def test_nonconvexity_at_half_epsilon_radius():
    eps = 1.0
    k = np.exp(-2.0)
    expected = 1 + k / (1 + k) * (4 / (1 + k) - 2)
    assert cf.nonconvexity_value(np.sqrt(eps / 2), eps) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("r", [0.4, 0.8, 1.3])
def test_nonconvexity_matches_finite_difference(r):
    mu = point_measure([[-r], [r]], epsilon=1.0)
    assert fd_horizontal_tensor(mu, [[-1.0], [1.0]]) == pytest.approx(cf.nonconvexity_value(r, 1.0), abs=1e-3)
