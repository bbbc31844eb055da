"""Paths of measures, their energies and approximate geodesics.

Two discretizations of a path are supported. In *vertical* mode every step
is a weight vector on one fixed ground space. In *particle* mode the
weights are frozen and the point positions move, which is how translations
and moving Diracs are represented.

Geodesics are computed by minimizing the chain objective

    sum_k S(rho_k, rho_{k+1}) / (t_{k+1} - t_k)

over the interior steps. The metric-tensor energy of the result is
reported alongside as an independent check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Measure, TangentVector, build_space, move_points, sq_distances
from .errors import IncompatibleSpaces, InputError, MaxIterationsExceeded, SupportViolation
from .sinkhorn import plan, same_measure, solve_potentials
from .tensor import fd_horizontal_tensor, map_A, map_A_inverse, metric_tensor, norm_constant, self_transport

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-12
LOGIT_SPAN = 700.0
LBFGS_MEMORY = 10
MAX_LOGIT_STEP = 4.0


@dataclass(frozen=True, eq=False)
class Path:
    """Time-indexed sequence of measures.

    Attributes
    ----------
    space : GroundSpace
        Common space in vertical mode, the space of the first step in
        particle mode.
    times : ndarray
        Increasing grid from 0 to 1.
    steps : list of Measure
    mode : {"vertical", "particle"}
    """

    space: object
    times: np.ndarray
    steps: list
    mode: str = "vertical"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.steps) or len(times) < 2:
            raise InputError("a path needs matching times and steps, at least two of each")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0):
            raise InputError("times must increase from 0 to 1")
        if self.mode not in ("vertical", "particle"):
            raise InputError(f"unknown path mode {self.mode!r}")
        if self.mode == "vertical" and any(m.space is not self.space for m in self.steps):
            raise IncompatibleSpaces("vertical paths keep every step on one space")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "steps", list(self.steps))

    def reversed(self) -> Path:
        return Path(self.space if self.mode == "vertical" else self.steps[-1].space,
                    1.0 - self.times[::-1], self.steps[::-1], self.mode)

    @classmethod
    def uniform(cls, steps, mode="vertical") -> Path:
        n = len(steps) - 1
        return cls(steps[0].space, np.linspace(0.0, 1.0, n + 1), steps, mode)


@dataclass(eq=False)
class GeodesicResult:
    path: Path
    energy: float
    chain_value: float
    ds_estimate: float
    lower_bound: float
    upper_bound: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    energy_scheme: str = "central"

    @property
    def discrepancy(self) -> float:
        """Relative gap between the chain value and the tensor energy."""
        scale = max(self.chain_value, self.energy)
        return 0.0 if scale == 0 else abs(self.chain_value - self.energy) / scale

    @property
    def flagged(self) -> bool:
        return self.discrepancy > 0.05


# ---------------------------------------------------------------------------
# energies


def _order_key(mu):
    pts = b"" if mu.space.points is None else mu.space.points.tobytes()
    return pts, mu.weights.tobytes()


def _divergence(mu, nu, tol):
    if same_measure(mu, nu):
        return 0.0
    if _order_key(nu) < _order_key(mu):
        # one fixed argument order makes the value bitwise symmetric
        mu, nu = nu, mu
    cross = solve_potentials(mu, nu, tol).value
    return cross - 0.5 * solve_potentials(mu, mu, tol).value - 0.5 * solve_potentials(nu, nu, tol).value


def chain_objective(path: Path, tol: float = 1e-12) -> float:
    """``sum_k S(rho_k, rho_{k+1}) / dt_k``; ``N sum_k S`` on a uniform grid.

    The sum is correctly rounded, so reversing the path leaves the value
    unchanged on uniform grids.
    """
    dt = np.diff(path.times)
    n = len(dt)
    terms = [_divergence(a, b, tol) for a, b in zip(path.steps[:-1], path.steps[1:])]
    if np.allclose(dt, 1.0 / n, rtol=1e-12, atol=0.0):
        return float(n * math.fsum(terms))
    return float(math.fsum(s / h for s, h in zip(terms, dt)))


def _restrict_to_support(b, mu):
    # remove the roundoff imbalance without touching points without mass
    b = np.where(mu.weights > 0, b, 0.0)
    return b - b.sum() * mu.weights


def _node_tangents(path: Path):
    w = np.array([m.weights for m in path.steps])
    t = path.times
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - w[:-2]) / (t[2:] - t[:-2])[:, None]
    if len(t) == 2:
        out[0] = out[1] = (w[1] - w[0]) / (t[1] - t[0])
    else:
        # second order one-sided differences at the ends
        # written on differences so constant stretches give exact zeros
        h0, h1 = t[1] - t[0], t[2] - t[1]
        out[0] = ((2 * h0 + h1) / (h0 * (h0 + h1)) * (w[1] - w[0])
                  - h0 / (h1 * (h0 + h1)) * (w[2] - w[1]))
        h0, h1 = t[-1] - t[-2], t[-2] - t[-3]
        out[-1] = ((2 * h0 + h1) / (h0 * (h0 + h1)) * (w[-1] - w[-2])
                   - h0 / (h1 * (h0 + h1)) * (w[-2] - w[-3]))
    return out


def _central_supported(path: Path) -> bool:
    tangents = _node_tangents(path)
    return all(np.all(m.weights[np.abs(b) > 1e-15] > 0) for m, b in zip(path.steps, tangents))


def path_energy(path: Path, scheme: str = "central") -> float:
    """Metric-tensor energy of a discrete path.

    Parameters
    ----------
    path : Path
    scheme : {"central", "midpoint", "auto"}
        ``central`` takes central-difference tangents at the nodes (second
        order one-sided at the ends) and integrates by the trapezoid rule.
        ``midpoint`` evaluates each segment's difference quotient at the
        average of its end measures, which stays valid when endpoints have
        points without mass. ``auto`` picks ``central`` when it applies.

    Returns
    -------
    float
    """
    if scheme == "auto":
        scheme = "central" if path.mode == "particle" or _central_supported(path) else "midpoint"
    if path.mode == "particle":
        return _particle_energy(path)
    t = path.times
    if scheme == "central":
        tangents = _node_tangents(path)
        vals = []
        for mu, b in zip(path.steps, tangents):
            if np.any((np.abs(b) > 1e-15) & (mu.weights == 0)):
                raise SupportViolation("a tangent charges points where the path step has no mass")
            b = _restrict_to_support(b, mu)
            vals.append(metric_tensor(self_transport(mu), TangentVector(mu.space, b)))
        return float(np.trapezoid(vals, t))
    if scheme == "midpoint":
        total = 0.0
        for a, c, h in zip(path.steps[:-1], path.steps[1:], np.diff(t)):
            mid = Measure.normalized(path.space, 0.5 * (a.weights + c.weights))
            b = _restrict_to_support((c.weights - a.weights) / h, mid)
            total += h * metric_tensor(self_transport(mid), TangentVector(path.space, b))
        return float(total)
    raise InputError(f"unknown scheme {scheme!r}")


def _particle_energy(path: Path) -> float:
    pts = np.array([m.space.points for m in path.steps])
    t = path.times
    vel = np.empty_like(pts)
    vel[1:-1] = (pts[2:] - pts[:-2]) / (t[2:] - t[:-2])[:, None, None]
    vel[0] = (pts[1] - pts[0]) / (t[1] - t[0])
    vel[-1] = (pts[-1] - pts[-2]) / (t[-1] - t[-2])
    vals = [fd_horizontal_tensor(m, v) for m, v in zip(path.steps, vel)]
    return float(np.trapezoid(vals, t))


# ---------------------------------------------------------------------------
# bounds


def _common_space(mu0: Measure, mu1: Measure):
    """Put both measures on one space, merging point sets when needed."""
    if mu0.space is mu1.space:
        return mu0, mu1
    if mu0.space.kind != "sqeuclidean" or mu1.space.kind != "sqeuclidean":
        raise IncompatibleSpaces("measures on different explicit spaces cannot be compared")
    if mu0.space.epsilon != mu1.space.epsilon:
        raise IncompatibleSpaces("measures have different epsilon")
    pts = np.vstack([mu0.space.points, mu1.space.points])
    space = build_space(pts, "sqeuclidean", mu0.space.epsilon)
    n0 = mu0.space.n
    w0 = np.concatenate([mu0.weights, np.zeros(mu1.space.n)])
    w1 = np.concatenate([np.zeros(n0), mu1.weights])
    return Measure(space, w0), Measure(space, w1)


def beta_distance(mu0: Measure, mu1: Measure, method: str = "gram") -> float:
    """Kernel-norm distance between the embeddings ``exp(-f / eps)``.

    ``gram`` evaluates ``(alpha0 - alpha1)^T gibbs (alpha0 - alpha1)`` with
    ``alpha = exp(f / eps) mu``; ``pointwise`` pairs ``alpha0 - alpha1``
    with the difference of the embedded functions evaluated at the points.
    """
    mu0, mu1 = _common_space(mu0, mu1)
    st0, st1 = self_transport(mu0), self_transport(mu1)
    d_alpha = map_A(mu0, st0) - map_A(mu1, st1)
    if method == "gram":
        sq = d_alpha @ mu0.space.gibbs @ d_alpha
    elif method == "pointwise":
        sq = d_alpha @ (st0.beta - st1.beta)
    else:
        raise InputError(f"unknown method {method!r}")
    return float(np.sqrt(max(sq, 0.0)))


def ds_bounds(mu0: Measure, mu1: Measure):
    """Lower and upper bounds on the geodesic distance.

    Returns
    -------
    (float, float)
        ``sqrt(eps / 2) |dbeta|`` and ``(pi / 2) sqrt(eps C / 2) |dbeta|``.
    """
    a, b = _common_space(mu0, mu1)
    if same_measure(a, b):
        return 0.0, 0.0
    d = beta_distance(a, b)
    eps = a.space.epsilon
    lower = np.sqrt(0.5 * eps) * d
    upper = 0.5 * np.pi * np.sqrt(0.5 * eps * norm_constant(a.space)) * d
    return float(lower), float(upper)


# ---------------------------------------------------------------------------
# solvers


def _linear_init(w0, w1, times):
    steps = []
    for t in times:
        w = np.maximum((1 - t) * w0 + t * w1, WEIGHT_FLOOR)
        steps.append(w / w.sum())
    return steps


def _arc_init(mu0, mu1, times):
    """Great-circle interpolation of the kernel embeddings, pulled back."""
    space = mu0.space
    a0, a1 = map_A(mu0), map_A(mu1)
    G = space.gibbs
    cos = np.clip(a0 @ G @ a1, -1.0, 1.0)
    theta = np.arccos(cos)
    steps = []
    for t in times:
        if theta < 1e-12:
            a = (1 - t) * a0 + t * a1
        else:
            a = (np.sin((1 - t) * theta) * a0 + np.sin(t * theta) * a1) / np.sin(theta)
        a = a / np.sqrt(a @ G @ a)
        w = np.maximum(map_A_inverse(a, space).weights, WEIGHT_FLOOR)
        steps.append(w / w.sum())
    return steps


def _deposit(points, positions, masses):
    """Spread point masses at arbitrary positions onto the points of a space.

    On the line each mass is split linearly between its two neighbours;
    in higher dimension it goes to the nearest point.
    """
    w = np.zeros(len(points))
    if points.shape[1] == 1:
        grid = points[:, 0]
        order = np.argsort(grid, kind="stable")
        sorted_grid = grid[order]
        for p, m in zip(positions[:, 0], masses):
            k = int(np.clip(np.searchsorted(sorted_grid, p), 1, len(sorted_grid) - 1))
            if len(sorted_grid) == 1:
                w[order[0]] += m
                continue
            lo, hi = sorted_grid[k - 1], sorted_grid[k]
            lam = float(np.clip((p - lo) / (hi - lo), 0.0, 1.0)) if hi > lo else 0.0
            w[order[k - 1]] += (1 - lam) * m
            w[order[k]] += lam * m
    else:
        nearest = np.argmin(sq_distances(positions, points), axis=1)
        np.add.at(w, nearest, masses)
    return w


def _displacement_init(mu0, mu1, times, tol):
    """Move every atom of the entropic plan along its segment and deposit it."""
    space = mu0.space
    if space.points is None:
        raise InputError("displacement initialization needs point coordinates")
    pi = plan(mu0, mu1, solve_potentials(mu0, mu1, tol)).matrix
    i, j = np.nonzero(pi > 1e-14)
    masses = pi[i, j]
    x = space.points
    steps = []
    for t in times:
        w = _deposit(x, (1 - t) * x[i] + t * x[j], masses)
        w = np.maximum(w / w.sum(), WEIGHT_FLOOR)
        steps.append(w / w.sum())
    steps[0], steps[-1] = mu0.weights, mu1.weights
    return steps


class _Chain:
    """Chain objective on a fixed space with warm-started potentials."""

    def __init__(self, space, w0, w1, times, tol):
        self.space = space
        self.ends = (Measure(space, w0), Measure(space, w1))
        self.dt = np.diff(times)
        self.tol = tol
        self.warm_self = {}
        self.warm_cross = {}

    def measures(self, interior):
        return [self.ends[0]] + [Measure.normalized(self.space, w) for w in interior] + [self.ends[1]]

    def evaluate(self, interior, with_grad=True):
        mus = self.measures(interior)
        selfs = []
        for k, mu in enumerate(mus):
            p = solve_potentials(mu, mu, self.tol, init=self.warm_self.get(k))
            self.warm_self[k] = p.f
            selfs.append(p)
        value = 0.0
        grads = [np.zeros(self.space.n) for _ in mus]
        for k in range(len(mus) - 1):
            a, b = mus[k], mus[k + 1]
            if same_measure(a, b):
                continue
            p = solve_potentials(a, b, self.tol, init=self.warm_cross.get(k))
            self.warm_cross[k] = p.g
            value += (p.value - 0.5 * selfs[k].value - 0.5 * selfs[k + 1].value) / self.dt[k]
            if with_grad:
                grads[k] += (p.f - selfs[k].f) / self.dt[k]
                grads[k + 1] += (p.g - selfs[k + 1].f) / self.dt[k]
        return value, grads[1:-1], mus


def _armijo_ok(new, old, slope, sigma=1e-4):
    return new <= old + sigma * slope


def _converged(history, rel_tol, patience):
    if len(history) <= patience:
        return False
    old, new = history[-1 - patience], history[-1]
    return old - new <= rel_tol * max(abs(new), np.finfo(float).tiny)


def _solve_vertical(mu0, mu1, n_steps, rel_tol, max_iter, patience, sinkhorn_tol, init, method):
    space = mu0.space
    times = np.linspace(0.0, 1.0, n_steps + 1)
    if init == "arc":
        start = _arc_init(mu0, mu1, times)
    elif init == "linear":
        start = _linear_init(mu0.weights, mu1.weights, times)
    elif init == "displacement":
        start = _displacement_init(mu0, mu1, times, sinkhorn_tol)
    elif init != "auto":
        raise InputError(f"unknown initialization {init!r}")
    chain = _Chain(space, mu0.weights, mu1.weights, times, sinkhorn_tol)
    if init == "auto":
        # keep the better of the two starting paths
        candidates = [_linear_init(mu0.weights, mu1.weights, times)]
        if space.points is not None:
            candidates.append(_displacement_init(mu0, mu1, times, sinkhorn_tol))
        scores = [chain.evaluate(c[1:-1], with_grad=False)[0] for c in candidates]
        start = candidates[int(np.argmin(scores))]
    sizes = [space.n] * (n_steps - 1)
    cuts = np.cumsum(sizes)[:-1]

    def weights_of(theta):
        out = []
        for z in np.split(theta, cuts):
            z = np.maximum(z - z.max(), -LOGIT_SPAN)
            w = np.exp(z)
            out.append(w / w.sum())
        return out

    def logit_grad(weights, grads):
        return np.concatenate([w * (g - w @ g) for w, g in zip(weights, grads)])

    theta = np.concatenate([np.log(w) for w in start[1:-1]])
    interior = weights_of(theta)
    value, grads, mus = chain.evaluate(interior)
    grad = logit_grad(interior, grads)
    history = [value]
    memory = []
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        mirror = -np.concatenate(grads)
        direction = mirror
        if method == "lbfgs":
            precond = _block_preconditioner(mus[1:-1], chain.dt, [chain.warm_self[k] for k in range(1, n_steps)])
            direction = _two_loop(grad, memory, precond)
            if direction @ grad >= 0:
                direction, memory = mirror, []
        accepted = False
        for attempt in (0, 1):
            slope = float(grad @ direction)
            # cap logit moves; a full step can push tiny weights far past the model's range
            trial = min(1.0, MAX_LOGIT_STEP / max(np.abs(direction).max(), np.finfo(float).tiny))
            while trial > 1e-16 and slope < 0:
                cand_theta = theta + trial * direction
                cand = weights_of(cand_theta)
                cand_value, _, _ = chain.evaluate(cand, with_grad=False)
                if _armijo_ok(cand_value, value, trial * slope):
                    accepted = True
                    break
                trial *= 0.5
            if accepted or direction is mirror:
                break
            direction, memory = mirror, []
        if not accepted:
            # no descent left at working precision
            converged = True
            break
        interior = cand
        _, grads, mus = chain.evaluate(interior)
        value = cand_value
        new_grad = logit_grad(interior, grads)
        s_vec, y_vec = cand_theta - theta, new_grad - grad
        if s_vec @ y_vec > 1e-12 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            memory = (memory + [(s_vec, y_vec)])[-LBFGS_MEMORY:]
        theta, grad = cand_theta, new_grad
        history.append(value)
        if _converged(history, rel_tol, patience):
            converged = True
            break
    path = Path(space, times, mus, "vertical")
    return path, value, it, converged, history


def _block_preconditioner(interior, dt, warm, damping=1e-5):
    """Inverse of a block diagonal model of the chain Hessian in logit coordinates.

    Each interior step contributes ``(eps / 2) D V diag(l / (1 - l^2)) V^T D``
    with ``D = diag(sqrt(w))`` and ``(l, V)`` the nonconstant eigenpairs of the
    self-transport kernel, scaled by the two adjacent time steps. Returns a
    callable applying the damped inverse.
    """
    blocks = []
    for k, mu in enumerate(interior):
        n = mu.space.n
        block = np.zeros((n, n))
        st = self_transport(mu, init=warm[k])
        lam, vec = st._quotient_eigen
        if lam.size:
            d = np.sqrt(st.weights)[:, None] * vec
            block[np.ix_(st.support, st.support)] = 0.5 * mu.space.epsilon * (d * (lam / (1 - lam**2))) @ d.T
        block *= 2.0 / dt[k] + 2.0 / dt[k + 1]
        shift = damping * max(np.trace(block), np.finfo(float).tiny) + np.finfo(float).tiny
        blocks.append(np.linalg.inv(block + shift * np.eye(n)))

    def apply(v):
        parts = np.split(v, len(blocks))
        return np.concatenate([b @ x for b, x in zip(blocks, parts)])

    return apply


def _two_loop(grad, memory, precond=None):
    """L-BFGS estimate of ``-H^-1 grad`` from stored step and gradient pairs.

    ``precond`` applies the initial inverse Hessian; without it the usual
    scalar scaling from the latest pair is used.
    """
    q = grad.copy()
    alphas = []
    for s_vec, y_vec in reversed(memory):
        a = (s_vec @ q) / (y_vec @ s_vec)
        alphas.append(a)
        q -= a * y_vec
    if precond is not None:
        q = precond(q)
    elif memory:
        s_vec, y_vec = memory[-1]
        q *= (s_vec @ y_vec) / (y_vec @ y_vec)
    for (s_vec, y_vec), a in zip(memory, reversed(alphas)):
        b = (y_vec @ q) / (y_vec @ s_vec)
        q += (a - b) * s_vec
    return -q


def _particle_gradient(mus, dt, tol):
    """Gradient of the chain objective in the interior point positions."""
    selfs = [plan(m, m, solve_potentials(m, m, tol)) for m in mus]
    value = 0.0
    grads = [np.zeros_like(m.space.points) for m in mus]
    for k in range(len(mus) - 1):
        a, b = mus[k], mus[k + 1]
        pot = solve_potentials(a, b, tol)
        pi = plan(a, b, pot).matrix
        x, y = a.space.points, b.space.points
        value += (pot.value - 0.5 * selfs[k].value - 0.5 * selfs[k + 1].value) / dt[k]
        # envelope theorem: only the explicit cost dependence contributes
        grads[k] += 2.0 * (pi.sum(1)[:, None] * x - pi @ y) / dt[k]
        grads[k + 1] += 2.0 * (pi.sum(0)[:, None] * y - pi.T @ x) / dt[k]
    for k, m in enumerate(mus):
        pi = selfs[k].matrix
        x = m.space.points
        share = (0.5 / dt[k - 1] if k > 0 else 0.0) + (0.5 / dt[k] if k < len(dt) else 0.0)
        grads[k] -= share * 4.0 * (pi.sum(1)[:, None] * x - pi @ x)
    return value, grads[1:-1]


def _solve_particle(mu0, mu1, n_steps, rel_tol, max_iter, patience, sinkhorn_tol):
    if mu0.space.kind != "sqeuclidean" or mu1.space.kind != "sqeuclidean":
        raise IncompatibleSpaces("particle mode needs point spaces with squared Euclidean cost")
    if mu0.space.n != mu1.space.n or not np.array_equal(mu0.weights, mu1.weights):
        raise InputError("particle mode needs equal weights on matching point lists")
    times = np.linspace(0.0, 1.0, n_steps + 1)
    dt = np.diff(times)
    x0, x1 = mu0.space.points, mu1.space.points
    pos = [(1 - t) * x0 + t * x1 for t in times[1:-1]]

    def build(p):
        return [mu0] + [move_points(mu0, q) for q in p] + [mu1]

    mus = build(pos)
    value, grads = _particle_gradient(mus, dt, sinkhorn_tol)
    history = [value]
    step, it, converged = 1.0, 0, False
    while it < max_iter:
        it += 1
        trial = min(2.0 * step, 1.0) if it > 1 else 1.0
        gnorm = sum(float((g * g).sum()) for g in grads)
        if gnorm == 0.0:
            converged = True
            break
        accepted = False
        while trial > 1e-16:
            cand = [p - trial * g for p, g in zip(pos, grads)]
            cand_mus = build(cand)
            cand_value = chain_objective(Path(mu0.space, times, cand_mus, "particle"), sinkhorn_tol)
            if _armijo_ok(cand_value, value, -trial * gnorm):
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            converged = True
            break
        step, pos, mus = trial, cand, cand_mus
        # keep the value the line search accepted; re-solving only shifts it by roundoff
        value, grads = cand_value, _particle_gradient(mus, dt, sinkhorn_tol)[1]
        history.append(value)
        if _converged(history, rel_tol, patience):
            converged = True
            break
    return Path(mu0.space, times, mus, "particle"), value, it, converged, history


def solve_geodesic(
    mu0: Measure,
    mu1: Measure,
    n_steps: int = 16,
    mode: str = "auto",
    rel_tol: float = 1e-9,
    max_iter: int = 5000,
    patience: int = 10,
    sinkhorn_tol: float = 1e-12,
    init: str = "auto",
    method: str = "lbfgs",
    energy: bool = True,
    strict: bool = False,
) -> GeodesicResult:
    """Approximate the geodesic between two measures.

    Parameters
    ----------
    mu0, mu1 : Measure
        Endpoints. In vertical mode both live on one space; in particle
        mode they share weights and their points correspond by index.
    n_steps : int
        Number of time intervals, at least 2.
    mode : {"auto", "vertical", "particle"}
        ``auto`` uses vertical mode when both measures share a space.
    rel_tol, patience : float, int
        Stop once the chain value dropped by less than ``rel_tol``
        (relative) over ``patience`` iterations.
    max_iter : int
        Iteration budget of the outer descent.
    sinkhorn_tol : float
        Tolerance of the inner Sinkhorn solves.
    init : {"auto", "linear", "displacement", "arc"}
        Starting path in vertical mode. ``linear`` interpolates weights,
        ``displacement`` moves the atoms of the entropic plan along
        straight lines and deposits them on the grid, ``arc`` follows the
        great circle between the kernel embeddings. ``auto`` starts from
        whichever of ``linear`` and ``displacement`` has the lower chain
        value.
    method : {"lbfgs", "mirror"}
        Descent directions in vertical mode. ``mirror`` is entropic mirror
        descent, a step ``-eta * grad`` on the logits of every interior
        step. ``lbfgs`` applies limited-memory quasi-Newton corrections in
        the same logit coordinates and falls back to the mirror step when
        the correction is not a descent direction. Both use Armijo
        backtracking with factor 1/2 from a unit step, shortened so that
        no logit moves by more than ``MAX_LOGIT_STEP``.
    energy : bool
        Also evaluate the metric-tensor energy of the final path.
    strict : bool
        Raise :class:`MaxIterationsExceeded` when the budget runs out.

    Returns
    -------
    GeodesicResult
    """
    if n_steps < 2:
        raise InputError("n_steps must be at least 2")
    if method not in ("lbfgs", "mirror"):
        raise InputError(f"unknown method {method!r}")
    if mode == "auto":
        mode = "vertical" if mu0.space is mu1.space else "particle"
    if mode == "vertical":
        if mu0.space is not mu1.space:
            raise IncompatibleSpaces("vertical mode needs both measures on one space")
        if same_measure(mu0, mu1):
            times = np.linspace(0.0, 1.0, n_steps + 1)
            path = Path(mu0.space, times, [mu0] * (n_steps + 1))
            return GeodesicResult(path, 0.0, 0.0, 0.0, 0.0, 0.0, 0, True, [0.0])
        path, value, it, conv, history = _solve_vertical(
            mu0, mu1, n_steps, rel_tol, max_iter, patience, sinkhorn_tol, init, method
        )
    elif mode == "particle":
        path, value, it, conv, history = _solve_particle(
            mu0, mu1, n_steps, rel_tol, max_iter, patience, sinkhorn_tol
        )
    else:
        raise InputError(f"unknown mode {mode!r}")

    lower, upper = ds_bounds(mu0, mu1)
    scheme = "central"
    e = float("nan")
    if energy:
        scheme = "central" if path.mode == "particle" or _central_supported(path) else "midpoint"
        e = path_energy(path, scheme)
    result = GeodesicResult(
        path=path, energy=e, chain_value=float(value), ds_estimate=float(np.sqrt(max(value, 0.0))),
        lower_bound=lower, upper_bound=upper, iterations=it, converged=conv, history=history,
        energy_scheme=scheme,
    )
    if energy and result.flagged:
        log.warning("chain value %.6g and tensor energy %.6g differ by %.1f%%",
                    result.chain_value, result.energy, 100 * result.discrepancy)
    if not conv:
        msg = f"geodesic descent stopped after {it} iterations without meeting the tolerance"
        if strict:
            raise MaxIterationsExceeded(msg, result=result)
        log.warning(msg)
    return result


# ---------------------------------------------------------------------------
# Schrodinger bridge


def bridge_components(mu0: Measure, mu1: Measure, t: float, tol: float = 1e-12):
    """Mixture weights, means and common variance of the entropic bridge at time ``t``."""
    if not 0.0 < t < 1.0:
        raise InputError("t must lie strictly between 0 and 1")
    if mu0.space.kind != "sqeuclidean" or mu1.space.kind != "sqeuclidean":
        raise IncompatibleSpaces("the bridge needs point spaces with squared Euclidean cost")
    pi = plan(mu0, mu1, solve_potentials(mu0, mu1, tol)).matrix
    i, j = np.nonzero(pi > 0)
    x, y = mu0.space.points, mu1.space.points
    means = (1.0 - t) * x[i] + t * y[j]
    variance = 0.5 * t * (1.0 - t) * mu0.space.epsilon
    return pi[i, j], means, variance


def bridge_marginal(mu0: Measure, mu1: Measure, t: float, query_points, tol: float = 1e-12) -> np.ndarray:
    """Density of the entropic bridge at time ``t`` at the query points.

    The bridge averages Gaussians ``N((1 - t) x + t y, t (1 - t) eps / 2)``
    over the optimal entropic plan.
    """
    weights, means, variance = bridge_components(mu0, mu1, t, tol)
    q = np.asarray(query_points, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    d = means.shape[1]
    if q.shape[1] != d:
        raise InputError("query points have the wrong dimension")
    sq = sq_distances(q, means)
    norm = (2.0 * np.pi * variance) ** (-0.5 * d)
    return norm * np.exp(-sq / (2.0 * variance)) @ weights
