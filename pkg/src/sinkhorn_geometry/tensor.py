"""Self-transport kernels and the Hessian metric of the Sinkhorn divergence.

For a measure ``mu`` with symmetric self-transport potential ``f`` the
self-transport kernel is ``k_mu = exp((f + f - c) / eps)``. On the support
of ``mu`` it gives two matrices,

* ``H[i, j] = k_mu(x_i, x_j)``, symmetric,
* ``K[i, j] = k_mu(x_i, x_j) mu_j``, row stochastic,

and the metric tensor of a balanced tangent ``b`` is
``(eps / 2) b^T (I - K^2)^+ H b``.

``K`` is similar to the symmetric matrix ``D^1/2 H D^1/2`` with
``D = diag(mu)``, whose top eigenvector is ``sqrt(mu)`` with eigenvalue one.
All inverses on the quotient by constants are done in that eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Measure, SignedVector, TangentVector, build_space, move_points
from .errors import (
    IncompatibleSpaces,
    InputError,
    NotInImage,
    NotTangent,
    SingularBeyondGauge,
    SupportViolation,
)
from .sinkhorn import sinkhorn_divergence, solve_potentials

SELF_TOL = 1e-13
EIGEN_ONE_TOL = 1e-12
FD_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class SelfTransport:
    """Self-transport data of a measure.

    ``f``, ``a`` and ``beta`` cover every point of the space; ``K`` and
    ``H`` are restricted to ``support``.
    """

    mu: Measure
    f: np.ndarray
    a: np.ndarray
    beta: np.ndarray
    K: np.ndarray
    H: np.ndarray
    H_excess: np.ndarray
    support: np.ndarray
    residual: float

    @property
    def epsilon(self) -> float:
        return self.mu.space.epsilon

    @property
    def weights(self) -> np.ndarray:
        return self.mu.weights[self.support]

    def quadratic_form(self, v) -> float:
        """``v^T H v`` for ``v`` in support coordinates.

        Evaluated as ``v^T (H - 1) v + (sum v)^2`` with ``H - 1`` from
        ``expm1``, which keeps full relative precision when ``H`` is close to
        the all-ones matrix and ``v`` is balanced.
        """
        v = np.asarray(v, dtype=float)
        return float(v @ self.H_excess @ v + np.sum(v) ** 2)

    @cached_property
    def _sym(self):
        r = np.sqrt(self.weights)
        return r[:, None] * self.H * r[None, :]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Spectrum of ``K`` in decreasing order."""
        return np.sort(np.linalg.eigvalsh(self._sym))[::-1]

    @cached_property
    def _quotient_eigen(self):
        # deflate the constant mode sqrt(mu) exactly, then diagonalize
        r = np.sqrt(self.weights)
        r = r / np.linalg.norm(r)
        proj = np.eye(len(r)) - np.outer(r, r)
        lam, vec = np.linalg.eigh(proj @ self._sym @ proj)
        drop = int(np.argmax(np.abs(vec.T @ r)))
        keep = np.arange(len(lam)) != drop
        lam, vec = lam[keep], vec[:, keep]
        if lam.size and lam.max() > 1.0 - EIGEN_ONE_TOL:
            raise SingularBeyondGauge(
                f"second eigenvalue {lam.max():.17g} is numerically one; the support looks disconnected"
            )
        return lam, vec


def self_transport(mu: Measure, tol: float = SELF_TOL, max_iter: int = 100_000, init=None) -> SelfTransport:
    """Solve the symmetric problem for ``mu`` and assemble ``K``, ``H``.

    ``init`` is an optional starting potential.
    """
    pot = solve_potentials(mu, mu, tol, max_iter, init=init)
    eps = mu.space.epsilon
    f = pot.f
    s = mu.support
    fs = f[s]
    excess = np.expm1((fs[:, None] + fs[None, :] - mu.space.cost[np.ix_(s, s)]) / eps)
    excess = 0.5 * (excess + excess.T)
    H = 1.0 + excess
    K = H * mu.weights[s][None, :]
    return SelfTransport(
        mu=mu, f=f, a=np.exp(f / eps), beta=np.exp(-f / eps), K=K, H=H, H_excess=excess,
        support=s, residual=pot.residual,
    )


def _support_part(st: SelfTransport, vec, name="tangent") -> np.ndarray:
    if isinstance(vec, (TangentVector, SignedVector)):
        if vec.space is not st.mu.space:
            raise IncompatibleSpaces(f"{name} and measure live on different spaces")
        vec = vec.weights
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (st.mu.space.n,):
        raise InputError(f"{name} has the wrong length")
    off = np.setdiff1d(np.arange(len(vec)), st.support)
    if off.size and np.any(vec[off] != 0):
        raise SupportViolation(f"{name} charges points outside the support of mu")
    return vec[st.support]


def _tangent_part(st, b) -> np.ndarray:
    if not isinstance(b, TangentVector):
        b = TangentVector(st.mu.space, b)
    return _support_part(st, b)


def pseudo_solve(st: SelfTransport, v, operator: str = "1-k2") -> np.ndarray:
    """Apply an inverse of ``I - K^2`` or ``I - K`` on the quotient by constants.

    Parameters
    ----------
    st : SelfTransport
    v : array_like
        Right hand side in support coordinates.
    operator : {"1-k2", "1-k"}

    Returns
    -------
    ndarray
        The solution with zero ``mu``-mean. The residual equals ``v`` minus
        its constant component ``(mu . v) 1``.
    """
    if operator not in ("1-k2", "1-k"):
        raise InputError(f"unknown operator {operator!r}")
    v = np.asarray(v, dtype=float)
    lam, vec = st._quotient_eigen
    if lam.size == 0:
        return np.zeros_like(v)
    r = np.sqrt(st.weights)
    spec = 1.0 - lam**2 if operator == "1-k2" else 1.0 - lam
    z = vec @ ((vec.T @ (r * v)) / spec)
    return z / r


def solve_one_plus_k(st: SelfTransport, v) -> np.ndarray:
    """Solve ``(I + K) x = v``; the operator is invertible."""
    return np.linalg.solve(np.eye(len(st.support)) + st.K, np.asarray(v, dtype=float))


def metric_tensor(st: SelfTransport, b) -> float:
    """Metric tensor ``(eps / 2) b^T (I - K^2)^+ H b`` of a vertical tangent.

    Parameters
    ----------
    st : SelfTransport
    b : TangentVector or array_like
        Balanced weights vanishing where ``mu`` has no mass.
    """
    bs = _tangent_part(st, b)
    lam, vec = st._quotient_eigen
    if lam.size == 0:
        return 0.0
    # l / (1 - l^2) = l + l^3 / (1 - l^2); the first part sums to b^T H b and
    # the second only needs V^T sqrt(w) H b, so tiny weights are never divided by
    z = vec.T @ (np.sqrt(st.weights) * (st.H @ bs))
    return float(0.5 * st.epsilon * (st.quadratic_form(bs) + np.sum(lam / (1.0 - lam**2) * z**2)))


def potential_derivative(st: SelfTransport, b) -> np.ndarray:
    """Derivative of ``s -> f_{mu, mu + s b}`` at zero, on the support.

    The representative has zero ``mu``-mean.
    """
    bs = _tangent_part(st, b)
    return -st.epsilon * pseudo_solve(st, st.H @ bs)


def self_potential_derivative(st: SelfTransport, b) -> np.ndarray:
    """Derivative of ``t -> f_{mu + t b, mu + t b}`` at zero, on the support."""
    bs = _tangent_part(st, b)
    return -st.epsilon * solve_one_plus_k(st, st.H @ bs)


def map_A(mu: Measure, st: SelfTransport | None = None) -> np.ndarray:
    """Weights ``exp(f / eps) mu`` of the rescaled measure."""
    st = self_transport(mu) if st is None else st
    return st.a * mu.weights


def map_B(mu: Measure, st: SelfTransport | None = None) -> SignedVector:
    """Kernel embedding of ``exp(f / eps) mu``; its values are ``exp(-f / eps)``."""
    return SignedVector(mu.space, map_A(mu, st))


def map_A_inverse(alpha, space, tol: float = 1e-6) -> Measure:
    """Recover ``mu`` from ``alpha = exp(f / eps) mu``.

    The i-th weight is ``alpha_i (gibbs alpha)_i``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (space.n,) or np.any(alpha < 0):
        raise NotInImage("alpha must be a nonnegative vector on the space")
    norm_sq = float(alpha @ space.gibbs @ alpha)
    if abs(norm_sq - 1.0) > tol:
        raise NotInImage(f"kernel norm of alpha is {np.sqrt(norm_sq):.17g}, not 1")
    return Measure.normalized(space, alpha * (space.gibbs @ alpha))


def beta_dot_from_mu_dot(st: SelfTransport, b) -> SignedVector:
    """Velocity of ``B(mu + t b)`` at zero, as a point expansion.

    On the support its values are ``(1 / a) (I + K)^-1 H b``.
    """
    bs = _tangent_part(st, b)
    w = solve_one_plus_k(st, st.H @ bs)
    coeffs = np.zeros(st.mu.space.n)
    s = st.support
    coeffs[s] = st.a[s] * (bs - st.weights * w)
    return SignedVector(st.mu.space, coeffs)


def tilde_metric_tensor(st: SelfTransport, beta_dot: SignedVector, tol: float = 1e-8) -> float:
    """Metric in the embedded coordinates.

    ``(eps / 2) (|beta_dot|^2 + 2 <a beta_dot, (I - K)^-1 a beta_dot>_mu)``
    """
    if beta_dot.space is not st.mu.space:
        raise IncompatibleSpaces("vector and measure live on different spaces")
    gibbs = st.mu.space.gibbs
    c = beta_dot.weights
    values = gibbs @ c
    alpha = st.a * st.mu.weights
    if abs(alpha @ values) > tol:
        raise NotTangent(f"vector is not tangent to the sphere: <beta_dot, beta> = {alpha @ values:.3e}")
    norm_sq = float(c @ values)
    lam, vec = st._quotient_eigen
    cross = 0.0
    if lam.size:
        s = st.support
        u = st.a[s] * values[s]
        z = vec.T @ (np.sqrt(st.weights) * u)
        cross = float(np.sum(z**2 / (1.0 - lam)))
    return 0.5 * st.epsilon * (norm_sq + 2.0 * cross)


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray
    gap: float
    q_bound: float


def contraction_factor(space) -> float:
    """``1 - exp(-4 sup c / eps)``."""
    return float(-np.expm1(-4.0 * space.cost_sup / space.epsilon))


def spectral_report(st: SelfTransport) -> SpectralReport:
    lam = st.eigenvalues
    gap = 1.0 - lam[1] if lam.size > 1 else 1.0
    return SpectralReport(eigenvalues=lam, gap=float(gap), q_bound=contraction_factor(st.mu.space))


def norm_constant(space) -> float:
    """``1 + 2 exp(11 sup c / (2 eps))``, the upper constant between the two metrics."""
    return float(1.0 + 2.0 * np.exp(5.5 * space.cost_sup / space.epsilon))


# ---------------------------------------------------------------------------
# finite-difference Hessians of the divergence


def _extrapolate(values):
    """Two Richardson levels for an even expansion ``g + c2 t^2 + c4 t^4``."""
    d0, d1, d2 = values
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


def _fd_tol(tol, space):
    # soft-min roundoff grows like eps * machine precision
    return FD_TOL * max(1.0, space.epsilon) if tol is None else tol


def fd_vertical_tensor(mu: Measure, b, steps=(1e-2, 5e-3, 2.5e-3), tol: float | None = None) -> float:
    """Hessian of ``t -> S(mu, mu + t b)`` by symmetric second differences.

    Steps are shrunk by ``min(mu_i / |b_i|)`` over the support of ``b`` so
    both ``mu + t b`` and ``mu - t b`` stay nonnegative. The default
    Sinkhorn tolerance is ``1e-13 max(1, eps)``.
    """
    b = b.weights if isinstance(b, TangentVector) else np.asarray(b, dtype=float)
    nz = b != 0
    if not np.any(nz):
        return 0.0
    if np.any(mu.weights[nz] <= 0):
        raise SupportViolation("tangent charges points outside the support of mu")
    scale = min(1.0, float(np.min(mu.weights[nz] / np.abs(b[nz]))))
    tol = _fd_tol(tol, mu.space)
    quotients = []
    for h in steps:
        t = h * scale
        plus = Measure.normalized(mu.space, mu.weights + t * b)
        minus = Measure.normalized(mu.space, mu.weights - t * b)
        s = sinkhorn_divergence(mu, plus, tol) + sinkhorn_divergence(mu, minus, tol)
        quotients.append(s / (2.0 * t * t))
    return float(_extrapolate(quotients))


def fd_horizontal_tensor(mu: Measure, velocity, steps=(1e-2, 5e-3, 2.5e-3), tol: float | None = None) -> float:
    """Hessian of ``t -> S(mu, (id + t v)_# mu)`` by symmetric second differences."""
    v = np.asarray(velocity, dtype=float).reshape(mu.space.points.shape)
    vmax = float(np.sqrt((v**2).sum(axis=1)).max())
    if vmax == 0:
        return 0.0
    scale = np.sqrt(mu.space.epsilon) / vmax
    tol = _fd_tol(tol, mu.space)
    pts = mu.space.points
    quotients = []
    for h in steps:
        t = h * scale
        plus = move_points(mu, pts + t * v)
        minus = move_points(mu, pts - t * v)
        s = sinkhorn_divergence(mu, plus, tol) + sinkhorn_divergence(mu, minus, tol)
        quotients.append(s / (2.0 * t * t))
    return float(_extrapolate(quotients))


def tensor_eps_infinity_check(mu: Measure, velocity, epsilon: float | None = None):
    """Compare the horizontal tensor with its large-``epsilon`` limit.

    Parameters
    ----------
    mu : Measure
        Measure on a squared Euclidean space.
    velocity : array_like, shape (n, d)
        Velocity of each point.
    epsilon : float, optional
        Evaluate at this regularization instead of the space's own.

    Returns
    -------
    (float, float)
        The finite-difference tensor and ``|sum_i mu_i v_i|^2``.
    """
    if mu.space.kind != "sqeuclidean":
        raise IncompatibleSpaces("horizontal motion needs the squared Euclidean cost")
    if epsilon is not None:
        mu = Measure(build_space(mu.space.points, "sqeuclidean", epsilon), mu.weights)
    v = np.asarray(velocity, dtype=float).reshape(mu.space.points.shape)
    mean_velocity = mu.weights @ v
    return fd_horizontal_tensor(mu, v), float(mean_velocity @ mean_velocity)
