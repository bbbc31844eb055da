"""Entropic optimal transport in the log domain.

The dual potentials ``(f, g)`` solve the fixed point system
``f = softmin(g, nu)`` and ``g = softmin(f, mu)`` where

    softmin(h, mu)(y) = -eps * log sum_i exp((h_i - c(x_i, y)) / eps) mu_i.

Everything is evaluated with max-subtracted log-sum-exp so that small
``epsilon`` does not overflow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Measure, cross_cost
from .errors import InputError, MaxIterationsExceeded, NotConverged

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class ConvergenceWarning(UserWarning):
    pass


def _lse_columns(a):
    """log-sum-exp over axis 0."""
    m = a.max(axis=0)
    return m + np.log(np.exp(a - m).sum(axis=0))


def _softmin(h, logw, cost, eps):
    # cost has shape (len(h), m); result has length m
    return -eps * _lse_columns((h[:, None] - cost) / eps + logw[:, None])


def t_eps(f, mu: Measure, cost=None) -> np.ndarray:
    """Soft-min transform of ``f`` against ``mu``.

    Parameters
    ----------
    f : array_like, shape (n,)
        Function on the points of ``mu.space``.
    mu : Measure
    cost : ndarray, shape (n, m), optional
        Cost from the points of ``mu`` to the evaluation points. Defaults
        to the cost of ``mu.space`` itself.

    Returns
    -------
    ndarray, shape (m,)
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (mu.space.n,):
        raise InputError("f must have one entry per point of the space")
    cost = mu.space.cost if cost is None else np.asarray(cost, dtype=float)
    s = mu.support
    return _softmin(f[s], np.log(mu.weights[s]), cost[s], mu.space.epsilon)


@dataclass(frozen=True, eq=False)
class Potentials:
    """Gauge-fixed solution of the Schrodinger system.

    ``f`` and ``g`` are defined on every point of the spaces of ``mu`` and
    ``nu`` respectively; off-support entries come from one extra soft-min
    evaluation. ``value`` is the entropic transport cost.
    """

    f: np.ndarray
    g: np.ndarray
    gauge_index: tuple
    residual: float
    iterations: int
    converged: bool
    value: float
    mu: Measure
    nu: Measure
    cost: np.ndarray


def same_measure(mu: Measure, nu: Measure) -> bool:
    return mu is nu or (mu.space is nu.space and np.array_equal(mu.weights, nu.weights))


def _dual_value(f, g, mu, nu, cost, eps):
    s, t = mu.support, nu.support
    lw_mu, lw_nu = np.log(mu.weights[s]), np.log(nu.weights[t])
    expo = (f[s][:, None] + g[t][None, :] - cost[np.ix_(s, t)]) / eps + lw_mu[:, None] + lw_nu[None, :]
    m = expo.max()
    mass = np.exp(m) * np.exp(expo - m).sum()
    # the penalty term vanishes at the fixed point; keeping it makes the
    # value stationary with respect to errors in the potentials
    return float(mu.weights[s] @ f[s] + nu.weights[t] @ g[t] - eps * (mass - 1.0))


def solve_potentials(
    mu: Measure,
    nu: Measure,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init=None,
    strict: bool = False,
) -> Potentials:
    """Solve for the entropic transport potentials between ``mu`` and ``nu``.

    Parameters
    ----------
    mu, nu : Measure
        Measures on the same space, or on two point spaces with squared
        Euclidean cost and equal ``epsilon``.
    tol : float
        Stop once the sup-norm change of ``g`` over one sweep is below this.
    max_iter : int
        Maximum number of sweeps.
    init : ndarray, optional
        Starting guess for ``g`` on the points of ``nu`` (for ``mu == nu``
        a guess for the common potential).
    strict : bool
        Raise :class:`MaxIterationsExceeded` instead of warning when the
        iteration budget runs out.

    Returns
    -------
    Potentials
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    eps = mu.space.epsilon
    cost = cross_cost(mu.space, nu.space)
    s, t = mu.support, nu.support
    lw_mu, lw_nu = np.log(mu.weights[s]), np.log(nu.weights[t])
    c_st = cost[np.ix_(s, t)]
    symmetric = same_measure(mu, nu)

    if symmetric:
        h = np.zeros(len(s)) if init is None else np.asarray(init, dtype=float)[s].copy()
        residual, it = np.inf, 0
        while it < max_iter:
            it += 1
            h_new = 0.5 * (h + _softmin(h, lw_mu, c_st, eps))
            residual = float(np.abs(h_new - h).max())
            h = h_new
            if residual <= tol:
                break
        f_s, g_t = h, h
    else:
        g_t = np.zeros(len(t)) if init is None else np.asarray(init, dtype=float)[t].copy()
        c_ts = c_st.T
        residual, it = np.inf, 0
        while it < max_iter:
            it += 1
            f_s = _softmin(g_t, lw_nu, c_ts, eps)
            g_new = _softmin(f_s, lw_mu, c_st, eps)
            residual = float(np.abs(g_new - g_t).max())
            g_t = g_new
            if residual <= tol:
                break
        if it == 0:
            f_s = _softmin(g_t, lw_nu, c_ts, eps)

    # extend to points without mass
    f = _softmin(g_t, lw_nu, cost[:, t].T, eps)
    g = _softmin(f_s, lw_mu, cost[s], eps)
    f[s] = f_s
    g[t] = g_t

    if symmetric:
        gauge = (0, 0)
    else:
        i0, j0 = (0, 0) if mu.space is nu.space else (int(s[0]), int(t[0]))
        lam = 0.5 * (g[j0] - f[i0])
        f += lam
        g -= lam
        gauge = (i0, j0)

    converged = residual <= tol
    value = _dual_value(f, g, mu, nu, cost, eps)
    out = Potentials(
        f=f, g=g, gauge_index=gauge, residual=residual, iterations=it,
        converged=converged, value=value, mu=mu, nu=nu, cost=cost,
    )
    if not converged:
        msg = f"Sinkhorn stopped after {it} sweeps with residual {residual:.3e} > {tol:.3e}"
        if strict:
            raise MaxIterationsExceeded(msg, result=out)
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    return out


def ot_eps(mu: Measure, nu: Measure, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Entropic transport cost ``<mu, f> + <nu, g>``."""
    return solve_potentials(mu, nu, tol, max_iter).value


def plan(mu: Measure, nu: Measure, potentials: Potentials | None = None, tol: float = DEFAULT_TOL):
    """Optimal coupling ``exp((f + g - c) / eps) mu nu``.

    Returns
    -------
    Coupling
    """
    pot = solve_potentials(mu, nu, tol) if potentials is None else potentials
    if not pot.converged:
        raise NotConverged("plan requested from unconverged potentials")
    eps = mu.space.epsilon
    expo = (pot.f[:, None] + pot.g[None, :] - pot.cost) / eps
    with np.errstate(divide="ignore"):
        logw = np.log(mu.weights)[:, None] + np.log(nu.weights)[None, :]
    matrix = np.exp(expo + logw)
    return Coupling(matrix=matrix, value=pot.value)


@dataclass(frozen=True, eq=False)
class Coupling:
    matrix: np.ndarray
    value: float


def sinkhorn_divergence(
    mu: Measure, nu: Measure, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> float:
    """Debiased cost ``OT(mu, nu) - OT(mu, mu) / 2 - OT(nu, nu) / 2``."""
    if same_measure(mu, nu):
        return 0.0
    cross = ot_eps(mu, nu, tol, max_iter)
    return cross - 0.5 * ot_eps(mu, mu, tol, max_iter) - 0.5 * ot_eps(nu, nu, tol, max_iter)


def grad_s_eps(mu: Measure, nu: Measure, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """First variation of ``S(., nu)`` at ``mu``.

    Returns ``f_{mu,nu} - f_{mu,mu}`` on all points of ``mu.space``,
    shifted to zero ``mu``-mean. Pairing with a balanced ``b`` gives the
    derivative of ``t -> S(mu + t b, nu)`` at zero.
    """
    f_cross = solve_potentials(mu, nu, tol, max_iter).f
    f_self = solve_potentials(mu, mu, tol, max_iter).f
    grad = f_cross - f_self
    return grad - mu.weights @ grad
