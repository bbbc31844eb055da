import numpy as np
import pytest
from scipy import integrate

from sinkhorn_geometry import closed_forms as cf
from sinkhorn_geometry.core import Measure, build_space, point_measure, translate
from sinkhorn_geometry.errors import IncompatibleSpaces, InputError, MaxIterationsExceeded, SupportViolation
from sinkhorn_geometry.geodesics import (
    Path,
    beta_distance,
    bridge_components,
    bridge_marginal,
    chain_objective,
    ds_bounds,
    path_energy,
    solve_geodesic,
)
from sinkhorn_geometry.sinkhorn import plan, sinkhorn_divergence


def small_pair(seed, n=5, eps=0.6):
    rng = np.random.default_rng(seed)
    space = build_space(np.linspace(0, 1, n), "sqeuclidean", eps)
    a = Measure.normalized(space, rng.uniform(0.1, 1, n))
    b = Measure.normalized(space, rng.uniform(0.1, 1, n))
    return a, b


def dirac_line(n, eps=1.0):
    return Path.uniform([point_measure([[k / n]], [1.0], eps) for k in range(n + 1)], mode="particle")


# ---------------------------------------------------------------------- paths


def test_path_validation():
    a, b = small_pair(0)
    with pytest.raises(InputError):
        Path(a.space, [0.0, 0.5], [a, b])
    with pytest.raises(InputError):
        Path(a.space, [0.0], [a])
    other = Measure(build_space([0.0, 1.0], "sqeuclidean", 0.6), [0.5, 0.5])
    with pytest.raises(IncompatibleSpaces):
        Path(a.space, [0.0, 1.0], [a, other])


def test_constant_path_has_zero_energy_and_chain():
    a, _ = small_pair(1)
    path = Path.uniform([a] * 5)
    assert chain_objective(path) == 0.0
    assert path_energy(path) == 0.0


@pytest.mark.parametrize("n", [1, 2, 5, 10])
def test_dirac_straight_line_chain_is_one(n):
    assert chain_objective(dirac_line(n)) == pytest.approx(1.0, rel=1e-12)


def test_two_step_chain_is_the_divergence():
    a, b = small_pair(2)
    path = Path.uniform([a, b])
    assert chain_objective(path, 1e-13) == pytest.approx(sinkhorn_divergence(a, b, 1e-13), rel=1e-12)


def test_reversed_path_has_same_chain_value():
    a, b = small_pair(3)
    mids = [Measure.normalized(a.space, a.weights + k * b.weights) for k in (0.5, 1.0, 3.0)]
    path = Path.uniform([a, *mids, b])
    assert chain_objective(path.reversed()) == chain_objective(path)
    uneven = Path(a.space, [0.0, 0.3, 1.0], [a, mids[1], b])
    rev = uneven.reversed()
    assert rev.times.tolist() == pytest.approx([0.0, 0.7, 1.0])
    assert chain_objective(rev) == pytest.approx(chain_objective(uneven), rel=1e-14)


def test_particle_energy_of_moving_dirac():
    assert path_energy(dirac_line(8)) == pytest.approx(1.0, rel=1e-6)


def test_central_energy_rejects_tangent_off_support():
    space = build_space([0.0, 1.0, 2.0], "sqeuclidean", 1.0)
    steps = [Measure(space, [0.5, 0.5, 0.0]), Measure(space, [0.4, 0.4, 0.2]), Measure(space, [0.3, 0.3, 0.4])]
    path = Path.uniform(steps)
    with pytest.raises(SupportViolation):
        path_energy(path, "central")
    assert path_energy(path, "midpoint") > 0
    assert path_energy(path, "auto") == path_energy(path, "midpoint")


def test_two_point_linear_path_energy_small_distance():
    r, eps, n = 0.05, 1.0, 64
    space = build_space([[0.0], [r]], "sqeuclidean", eps)
    steps = [Measure(space, [1 - t, t]) for t in np.linspace(0, 1, n + 1)]
    energy = path_energy(Path.uniform(steps), "midpoint")
    assert energy == pytest.approx(r * r, rel=1e-2)


def test_gaussian_geodesic_energy_on_a_grid():
    v0, v1, eps, n = 0.3, 1.2, 1.0, 64
    x = np.linspace(-6 * np.sqrt(v1), 6 * np.sqrt(v1), 200)
    space = build_space(x, "sqeuclidean", eps)
    vt, d_hat = cf.gaussian_geodesic(v0, v1, np.linspace(0, 1, n + 1), eps)
    steps = [Measure.normalized(space, np.exp(-0.5 * x * x / v)) for v in vt]
    energy = path_energy(Path.uniform(steps))
    assert energy == pytest.approx(d_hat**2, rel=1e-2)


# --------------------------------------------------------------------- bounds


def test_beta_distance_two_ways():
    for seed in range(4):
        a, b = small_pair(seed)
        assert beta_distance(a, b, "gram") == pytest.approx(beta_distance(a, b, "pointwise"), abs=1e-10)
    with pytest.raises(InputError):
        beta_distance(a, b, "other")


def test_bounds_vanish_on_equal_measures():
    a, _ = small_pair(5)
    assert ds_bounds(a, a) == (0.0, 0.0)


def test_bounds_across_point_sets():
    mu = point_measure([[0.0], [1.0]], [0.5, 0.5])
    nu = point_measure([[2.0]], [1.0])
    lower, upper = ds_bounds(mu, nu)
    assert 0 < lower <= upper


# -------------------------------------------------------------------- solver


def test_geodesic_between_equal_measures():
    a, _ = small_pair(6)
    res = solve_geodesic(a, a, n_steps=4)
    assert res.ds_estimate == 0.0 and res.converged


def test_geodesic_respects_bounds_and_energy():
    a, b = small_pair(7)
    res = solve_geodesic(a, b, n_steps=8)
    assert res.converged
    assert res.ds_estimate >= res.lower_bound - 1e-6
    assert res.ds_estimate <= res.upper_bound
    assert np.all(np.diff(res.history) <= 0)
    assert res.ds_estimate**2 <= sinkhorn_divergence(a, b) + 1e-10
    assert not res.flagged


def test_geodesic_symmetric_under_swap():
    a, b = small_pair(8)
    fwd = solve_geodesic(a, b, n_steps=8, energy=False)
    bwd = solve_geodesic(b, a, n_steps=8, energy=False)
    assert fwd.ds_estimate == pytest.approx(bwd.ds_estimate, abs=1e-4)


def test_mirror_method_agrees_with_quasi_newton():
    a, b = small_pair(9, n=3, eps=1.0)
    fast = solve_geodesic(a, b, n_steps=3, energy=False)
    slow = solve_geodesic(a, b, n_steps=3, method="mirror", energy=False)
    assert slow.ds_estimate == pytest.approx(fast.ds_estimate, abs=1e-4)


def test_geodesic_initializations_agree():
    a, b = small_pair(10, n=4)
    values = [solve_geodesic(a, b, n_steps=4, init=i, energy=False).ds_estimate
              for i in ("linear", "arc", "displacement")]
    assert max(values) - min(values) <= 1e-4


def test_geodesic_estimates_satisfy_triangle_inequality():
    space = build_space(np.linspace(0, 1, 4), "sqeuclidean", 0.5)
    rng = np.random.default_rng(11)
    mus = [Measure.normalized(space, rng.uniform(0.1, 1, 4)) for _ in range(3)]

    def d(i, j):
        return solve_geodesic(mus[i], mus[j], n_steps=8, energy=False).ds_estimate

    assert d(0, 2) <= d(0, 1) + d(1, 2) + 1e-2


def test_particle_mode_translation():
    mu = point_measure([[0.0, 0.0], [0.5, 0.2]], [0.4, 0.6], epsilon=1.0)
    u = np.array([0.6, -0.3])
    res = solve_geodesic(mu, translate(mu, u), n_steps=6)
    assert res.path.mode == "particle"
    assert res.ds_estimate == pytest.approx(np.linalg.norm(u), rel=0.05)


def test_strict_budget_raises_with_best_iterate():
    a, b = small_pair(12)
    with pytest.raises(MaxIterationsExceeded) as exc:
        solve_geodesic(a, b, n_steps=4, max_iter=1, strict=True, energy=False)
    assert exc.value.result.iterations == 1
    lenient = solve_geodesic(a, b, n_steps=4, max_iter=1, energy=False)
    assert not lenient.converged


def test_solver_rejects_bad_options():
    a, b = small_pair(13)
    with pytest.raises(InputError):
        solve_geodesic(a, b, n_steps=1)
    with pytest.raises(InputError):
        solve_geodesic(a, b, method="newton")
    with pytest.raises(InputError):
        solve_geodesic(a, b, init="random")


# -------------------------------------------------------------------- bridge


def test_bridge_between_equal_diracs_is_gaussian():
    eps = 0.8
    d0 = point_measure([[0.0]], [1.0], eps)
    x = np.linspace(-2, 2, 9)
    var = eps / 8
    expected = np.exp(-x * x / (2 * var)) / np.sqrt(2 * np.pi * var)
    assert np.allclose(bridge_marginal(d0, d0, 0.5, x), expected, rtol=1e-14)
    # the geodesic between equal measures is constant, the bridge is not
    assert bridge_marginal(d0, d0, 0.25, [0.0])[0] != pytest.approx(expected[4])


def test_bridge_density_integrates_to_one():
    mu = point_measure([[-0.5], [0.2]], [0.3, 0.7], epsilon=0.5)
    nu = point_measure([[0.4], [1.0], [1.5]], [0.2, 0.5, 0.3], epsilon=0.5)
    for t in (0.1, 0.5, 0.9):
        mass, _ = integrate.quad(lambda y: bridge_marginal(mu, nu, t, [y])[0], -6, 8, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-4)


def test_bridge_weights_are_plan_entries():
    mu = point_measure([[0.0], [1.0]], [0.5, 0.5], epsilon=1.0)
    nu = point_measure([[2.0], [3.0]], [0.25, 0.75], epsilon=1.0)
    weights, means, variance = bridge_components(mu, nu, 0.3)
    assert weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(np.sort(weights), np.sort(plan(mu, nu).matrix.ravel()))
    assert variance == pytest.approx(0.5 * 0.3 * 0.7)


def test_bridge_concentrates_near_start():
    mu = point_measure([[0.0], [1.0]], [0.5, 0.5], epsilon=1.0)
    nu = point_measure([[3.0]], [1.0], epsilon=1.0)
    weights, means, variance = bridge_components(mu, nu, 1e-6)
    assert np.sqrt(variance) < 1e-2
    assert np.all(np.min(np.abs(means - mu.space.points[:, 0]), axis=1) < 1e-2)


def test_bridge_rejects_endpoint_times():
    mu = point_measure([[0.0]], [1.0])
    with pytest.raises(InputError):
        bridge_components(mu, mu, 0.0)


def test_energy_stays_positive_when_a_weight_collapses():
    # the geodesic drains the middle point almost completely
    space = build_space(np.linspace(0, 1, 5), "sqeuclidean", 0.5)
    mu = Measure.normalized(space, [1, 2, 3, 2, 1])
    nu = Measure.normalized(space, [3, 1, 1, 1, 3])
    res = solve_geodesic(mu, nu, n_steps=8)
    assert min(m.weights[2] for m in res.path.steps) < 1e-10
    assert res.energy > 0 and not res.flagged
