"""Exact formulas used as oracles for the generic solvers.

Three families are covered.

* One dimensional Gaussians ``N(m, v)``: transport cost, divergence,
  metric tensor and geodesics of the variance.
* Symmetric pairs of Diracs ``(delta_r + delta_-r) / 2`` on the line.
* The two-point space ``{x1, x2}`` with ``|x1 - x2| = r``.

Two distance conventions coexist. The symmetric Dirac pair uses the points
``+r`` and ``-r`` (so the Gibbs weight between them is ``exp(-4 r^2 / eps)``)
while the two-point space puts its points at distance ``r`` and writes
``b = exp(-2 r^2 / eps)`` for the squared Gibbs weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateMass, InputError, QuadratureFailure

QUAD_TOL = 1e-12
QUAD_FAIL = 1e-10


# ---------------------------------------------------------------------------
# Gaussians


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance >= 0:
            raise InputError("variance must be nonnegative")


def gaussian_kappa(v0, v1, eps):
    return 1.0 + np.sqrt(1.0 + 16.0 * np.asarray(v0) * np.asarray(v1) / eps**2)


def gaussian_ot_eps(v0, v1, eps):
    """Entropic transport cost between centered Gaussians of variances v0, v1."""
    k = gaussian_kappa(v0, v1, eps)
    return v0 + v1 - 0.5 * eps * (k - np.log(k) + np.log(2.0) - 2.0)


def gaussian_cross_covariance(v0, v1, eps):
    """Covariance of the optimal entropic plan between ``N(0, v0)`` and ``N(0, v1)``.

    Setting the derivative in ``s`` of ``v0 + v1 - 2 s - (eps / 2) log(1 - s^2 / (v0 v1))``
    to zero gives ``2 s^2 + eps s - 2 v0 v1 = 0``.
    """
    return 0.25 * eps * (gaussian_kappa(v0, v1, eps) - 2.0)


def gaussian_sinkhorn(g0: Gaussian1D, g1: Gaussian1D, eps: float) -> float:
    """Sinkhorn divergence between two one dimensional Gaussians."""
    k00 = gaussian_kappa(g0.variance, g0.variance, eps)
    k11 = gaussian_kappa(g1.variance, g1.variance, eps)
    k01 = gaussian_kappa(g0.variance, g1.variance, eps)
    shape = 0.25 * eps * (k00 - 2.0 * k01 + k11 + np.log(k01**2 / (k00 * k11)))
    return float((g0.mean - g1.mean) ** 2 + shape)


def gaussian_metric(v, eps):
    """Metric tensor on variances, ``1 / (4 sqrt(eps^2 / 16 + v^2))``."""
    return 1.0 / (4.0 * np.sqrt(eps**2 / 16.0 + np.asarray(v, dtype=float) ** 2))


def _speed(x):
    return (1.0 + x * x) ** -0.25


def antiderivative(x: float) -> float:
    """``F(x) = int_0^x (1 + s^2)^(-1/4) ds`` by adaptive quadrature."""
    x = float(x)
    if x == 0.0:
        return 0.0
    value, err = integrate.quad(_speed, 0.0, x, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
    if err > QUAD_FAIL * max(1.0, abs(value)):
        raise QuadratureFailure(f"quadrature error estimate {err:.3e} at x={x}")
    return float(value)


def antiderivative_inverse(y: float, tol: float = 1e-13) -> float:
    """Inverse of :func:`antiderivative` on ``[0, inf)`` by safeguarded Newton."""
    y = float(y)
    if y < 0:
        return -antiderivative_inverse(-y, tol)
    if y == 0:
        return 0.0
    # (1 + s^2)^(-1/4) >= (1 + s)^(-1/2) gives F(x) >= 2 (sqrt(1 + x) - 1)
    lo, hi = 0.0, (0.5 * y + 1.0) ** 2 - 1.0
    x = min(y, hi)
    for _ in range(200):
        r = antiderivative(x) - y
        if r > 0:
            hi = x
        else:
            lo = x
        step = r / _speed(x)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, x):
            return x_new
        x = x_new
    raise QuadratureFailure(f"inverse did not converge for y={y}")


def gaussian_geodesic(v0: float, v1: float, t, eps: float):
    """Geodesic between centered Gaussians, parametrized by variance.

    Returns
    -------
    v_t : float or ndarray
        Variance at time(s) ``t``.
    d_hat : float
        Length of the geodesic, ``(sqrt(eps) / 4) |F(4 v1 / eps) - F(4 v0 / eps)|``.
    """
    if v0 < 0 or v1 < 0:
        raise InputError("variances must be nonnegative")
    y0 = antiderivative(4.0 * v0 / eps)
    y1 = antiderivative(4.0 * v1 / eps)
    d_hat = 0.25 * np.sqrt(eps) * abs(y1 - y0)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any((ts < 0) | (ts > 1)):
        raise InputError("t must lie in [0, 1]")
    vt = np.array([0.25 * eps * antiderivative_inverse((1.0 - s) * y0 + s * y1) for s in ts])
    vt[ts == 0] = v0
    vt[ts == 1] = v1
    if np.ndim(t) == 0:
        return float(vt[0]), float(d_hat)
    return vt, float(d_hat)


def wasserstein_variance_path(v0, v1, t):
    """Variance along the unregularized transport geodesic."""
    t = np.asarray(t, dtype=float)
    return ((1.0 - t) * np.sqrt(v0) + t * np.sqrt(v1)) ** 2


def gaussian_bridge_variance(v0, v1, t, eps):
    """Variance at time ``t`` of the entropic bridge between ``N(0, v0)`` and ``N(0, v1)``.

    The bridge averages Brownian bridges with variance ``t (1 - t) eps / 2``
    over the Gaussian optimal plan.
    """
    t = np.asarray(t, dtype=float)
    s = gaussian_cross_covariance(v0, v1, eps)
    return (1 - t) ** 2 * v0 + t**2 * v1 + 2 * t * (1 - t) * s + 0.5 * eps * t * (1 - t)


def triangle_psi(x: float, v: float, eps: float = 1.0) -> float:
    """Squared-form triangle defect for ``delta_0``, ``N(0, eps x / 4)``, ``N(0, eps v / 4)``.

    Negative values mean the square root of the divergence violates the
    triangle inequality on this triple.
    """
    g0 = Gaussian1D(0.0, 0.0)
    g1 = Gaussian1D(0.0, 0.25 * eps * x)
    g2 = Gaussian1D(0.0, 0.25 * eps * v)
    s01 = gaussian_sinkhorn(g0, g1, eps)
    s02 = gaussian_sinkhorn(g0, g2, eps)
    s12 = gaussian_sinkhorn(g1, g2, eps)
    return -4.0 / eps * (s02 - s01 - s12 - 2.0 * np.sqrt(max(s01, 0.0) * max(s12, 0.0)))


def triangle_psi_slope(v: float) -> float:
    """Limit of the derivative of :func:`triangle_psi` at ``x = 0``."""
    w = np.sqrt(1.0 + v * v)
    return -0.5 * v + np.sqrt(w - 1.0 + np.log(2.0) - np.log1p(w))


# ---------------------------------------------------------------------------
# symmetric Dirac pairs


def _log_pair_kernel(r, s, eps):
    """``log(k(r, s) + k(r, -s))`` for the Gaussian kernel."""
    return np.logaddexp(-((r - s) ** 2) / eps, -((r + s) ** 2) / eps)


def two_dirac_values(r: float, s: float, eps: float):
    """Transport cost and divergence between ``mu_r`` and ``mu_s``.

    ``mu_r = (delta_r + delta_-r) / 2`` on the real line.

    Returns
    -------
    (float, float)
    """
    if r < 0 or s < 0:
        raise InputError("r and s must be nonnegative")
    lk = _log_pair_kernel(r, s, eps)
    ot = eps * (np.log(2.0) - lk)
    sdiv = eps * (
        -lk + 0.5 * np.log1p(np.exp(-4.0 * r * r / eps)) + 0.5 * np.log1p(np.exp(-4.0 * s * s / eps))
    )
    return float(ot), float(sdiv)


def two_dirac_self_potential(r: float, eps: float) -> float:
    """Constant self-transport potential of ``mu_r``."""
    return 0.5 * eps * (np.log(2.0) - np.log1p(np.exp(-4.0 * r * r / eps)))


def triangle_gap(eps: float = 1.0) -> float:
    """Normalized triangle defect of ``sqrt(S)`` along ``mu_0, mu_r, mu_2r`` with ``r = sqrt(eps)``.

    Positive values mean the triangle inequality fails.
    """
    r = np.sqrt(eps)
    s_far = two_dirac_values(0.0, 2 * r, eps)[1]
    s_a = two_dirac_values(0.0, r, eps)[1]
    s_b = two_dirac_values(r, 2 * r, eps)[1]
    return float((np.sqrt(s_far) - np.sqrt(s_a) - np.sqrt(s_b)) / np.sqrt(eps))


def nonconvexity_value(r, eps):
    """Metric tensor of ``mu_r`` under symmetric spreading at unit speed.

    ``1 + kappa / (1 + kappa) ((8 r^2 / eps) / (1 + kappa) - 2)`` with
    ``kappa = exp(-4 r^2 / eps)``. The transport value for the same motion
    is one.
    """
    x = 4.0 * np.asarray(r, dtype=float) ** 2 / eps
    k = np.exp(-x)
    return 1.0 + k / (1.0 + k) * (2.0 * x / (1.0 + k) - 2.0)


def nonconvexity_threshold(eps: float) -> float:
    """Radius where :func:`nonconvexity_value` crosses one.

    With ``x = 4 r^2 / eps`` the sign of ``value - 1`` is that of
    ``x - 1 - exp(-x)``, whose only root lies in ``(1, 2)``.
    """
    x = optimize.brentq(lambda x: x - 1.0 - np.exp(-x), 1.0, 2.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return float(np.sqrt(0.25 * eps * x))


# ---------------------------------------------------------------------------
# two-point space


@dataclass(frozen=True)
class TwoPointState:
    """Measure ``m delta_x1 + (1 - m) delta_x2`` with ``|x1 - x2| = r``."""

    r: float
    m: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise DegenerateMass(f"mass {self.m} must lie strictly between 0 and 1")
        if self.r <= 0 or self.epsilon <= 0:
            raise InputError("r and epsilon must be positive")

    @property
    def b(self) -> float:
        return float(np.exp(-2.0 * self.r**2 / self.epsilon))

    @property
    def M2(self) -> float:
        return self.m * (1.0 - self.m)

    def _parts(self):
        b, M2 = self.b, self.M2
        one_minus_b = -np.expm1(-2.0 * self.r**2 / self.epsilon)
        delta = 4.0 * M2 * b * one_minus_b
        root = np.sqrt(b * b + delta)
        # rationalized forms of the quadratic root avoid cancellation as b -> 1
        p = 2.0 * M2 * b / (b + root)
        M2_minus_p = M2 * delta / (b + root) ** 2
        return p, M2_minus_p

    @property
    def p(self) -> float:
        """Mass exchanged between the two points by the self-transport plan."""
        return float(self._parts()[0])

    @property
    def lambda2(self) -> float:
        p, diff = self._parts()
        return float(diff / self.M2)


def two_point_tensor(state: TwoPointState, m_dot: float) -> float:
    """Metric tensor of the vertical tangent ``m_dot (delta_x1 - delta_x2)``."""
    p, diff = state._parts()
    M2 = state.M2
    return float(0.5 * state.epsilon * m_dot**2 * diff / (p * (M2 + diff)))
