"""Ground spaces, measures, tangent vectors and kernel norms.

A :class:`GroundSpace` is a finite set of points together with a symmetric
nonnegative cost, a regularization strength ``epsilon`` and the Gibbs
kernel ``exp(-cost / epsilon)``. Measures, balanced tangents and kernel
expansions all live on a space as plain weight vectors indexed by its
points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IncompatibleSpaces,
    InputError,
    InvalidMeasure,
    NegativeCost,
    NonPositiveEpsilon,
    NonSymmetricCost,
    UnbalancedTangent,
)

MASS_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def sq_distances(x, y):
    """Pairwise squared Euclidean distances between the rows of x and y."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


@dataclass(frozen=True, eq=False)
class GroundSpace:
    """Finite ground space with cost, regularization and Gibbs kernel.

    Attributes
    ----------
    points : ndarray, shape (n, d) or None
        Coordinates. ``None`` when only a cost matrix was supplied.
    cost : ndarray, shape (n, n)
        Symmetric nonnegative cost.
    epsilon : float
        Entropic regularization, strictly positive.
    gibbs : ndarray, shape (n, n)
        ``exp(-cost / epsilon)``.
    kind : str
        ``"sqeuclidean"`` or ``"explicit"``.
    """

    points: np.ndarray | None
    cost: np.ndarray
    epsilon: float
    gibbs: np.ndarray = field(repr=False)
    kind: str = "explicit"

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def dim(self) -> int | None:
        return None if self.points is None else self.points.shape[1]

    @property
    def cost_sup(self) -> float:
        return float(self.cost.max())

    def with_epsilon(self, epsilon: float) -> GroundSpace:
        if self.kind == "sqeuclidean":
            return build_space(self.points, "sqeuclidean", epsilon)
        return build_space(self.points, self.cost, epsilon)


def build_space(points=None, cost="sqeuclidean", epsilon=1.0, check_psd=False) -> GroundSpace:
    """Build a :class:`GroundSpace`.

    Parameters
    ----------
    points : array_like, shape (n, d) or (n,), optional
        Point coordinates. One dimensional input is read as n points on
        the line. Required for the squared Euclidean cost.
    cost : {"sqeuclidean"} or array_like, shape (n, n)
        Either the keyword or an explicit symmetric nonnegative matrix.
    epsilon : float
        Regularization strength.
    check_psd : bool
        For explicit costs, eigen-check that the Gibbs matrix is positive
        semidefinite and warn if it is not.

    Returns
    -------
    GroundSpace
    """
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise NonPositiveEpsilon(f"epsilon must be positive, got {epsilon}")

    pts = None
    if points is not None and np.size(points) > 0:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or not np.all(np.isfinite(pts)):
            raise InputError("points must be a finite (n, d) array")

    if isinstance(cost, str):
        if cost != "sqeuclidean":
            raise InputError(f"unknown cost kind {cost!r}")
        if pts is None:
            raise InputError("the squared Euclidean cost needs points")
        c = sq_distances(pts, pts)
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 0.0)
        kind = "sqeuclidean"
    else:
        c = np.asarray(cost, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise InputError("cost matrix must be square and nonempty")
        if not np.all(np.isfinite(c)):
            raise InputError("cost matrix must be finite")
        scale = max(1.0, float(np.abs(c).max()))
        if np.abs(c - c.T).max() > 1e-12 * scale:
            raise NonSymmetricCost("cost matrix is not symmetric")
        if c.min() < 0:
            raise NegativeCost("cost matrix has negative entries")
        if pts is not None and pts.shape[0] != c.shape[0]:
            raise InputError("points and cost matrix sizes differ")
        c = 0.5 * (c + c.T)
        kind = "explicit"

    gibbs = np.exp(-c / epsilon)
    if check_psd and kind == "explicit":
        lam_min = np.linalg.eigvalsh(gibbs).min()
        if lam_min < -1e-10 * c.shape[0]:
            warnings.warn(
                f"Gibbs matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})",
                stacklevel=2,
            )
    return GroundSpace(
        points=None if pts is None else _frozen(pts),
        cost=_frozen(c),
        epsilon=epsilon,
        gibbs=_frozen(gibbs),
        kind=kind,
    )


def cross_cost(a: GroundSpace, b: GroundSpace) -> np.ndarray:
    """Cost matrix between the points of two spaces.

    Identical spaces return their own cost. Distinct spaces must both
    carry points under the squared Euclidean cost and share ``epsilon``.
    """
    if a is b:
        return a.cost
    if a.epsilon != b.epsilon:
        raise IncompatibleSpaces("spaces have different epsilon")
    if a.kind == "sqeuclidean" and b.kind == "sqeuclidean":
        if a.dim != b.dim:
            raise IncompatibleSpaces("spaces have different dimensions")
        return sq_distances(a.points, b.points)
    if a.kind == b.kind == "explicit" and a.cost.shape == b.cost.shape and np.array_equal(a.cost, b.cost):
        return a.cost
    raise IncompatibleSpaces("explicit costs can only relate measures on the same space")


def _check_vector(space, weights, name):
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != space.n:
        raise InputError(f"{name} has length {w.shape[0]}, space has {space.n} points")
    if not np.all(np.isfinite(w)):
        raise InputError(f"{name} must be finite")
    return w


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability vector on a ground space."""

    space: GroundSpace
    weights: np.ndarray

    def __post_init__(self):
        w = _check_vector(self.space, self.weights, "weights")
        if w.min() < 0:
            raise InvalidMeasure("weights must be nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise InvalidMeasure(f"weights sum to {w.sum():.17g}, not 1")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def normalized(cls, space, weights, rtol=None):
        """Rescale ``weights`` to unit mass.

        With ``rtol`` set, weights whose total differs from one by more
        than ``rtol`` are rejected instead of rescaled.
        """
        w = _check_vector(space, weights, "weights")
        total = w.sum()
        if total <= 0:
            raise InvalidMeasure("weights have no mass")
        if rtol is not None and abs(total - 1.0) > rtol:
            raise InvalidMeasure(f"weights sum to {total:.17g}, not 1")
        return cls(space, w / total)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def mean(self) -> np.ndarray:
        if self.space.points is None:
            raise InputError("mean needs point coordinates")
        return self.weights @ self.space.points


def dirac(space: GroundSpace, index: int) -> Measure:
    w = np.zeros(space.n)
    w[index] = 1.0
    return Measure(space, w)


def uniform(space: GroundSpace) -> Measure:
    return Measure(space, np.full(space.n, 1.0 / space.n))


def point_measure(points, weights=None, epsilon=1.0) -> Measure:
    """Measure on its own squared Euclidean space built from ``points``."""
    space = build_space(points, "sqeuclidean", epsilon)
    if weights is None:
        weights = np.full(space.n, 1.0 / space.n)
    return Measure.normalized(space, weights)


def move_points(mu: Measure, new_points) -> Measure:
    """Same weights carried by new positions (a pushforward)."""
    if mu.space.kind != "sqeuclidean":
        raise IncompatibleSpaces("moving points needs the squared Euclidean cost")
    pts = np.asarray(new_points, dtype=float).reshape(mu.space.points.shape)
    return Measure(build_space(pts, "sqeuclidean", mu.space.epsilon), mu.weights)


def translate(mu: Measure, shift) -> Measure:
    return move_points(mu, mu.space.points + np.asarray(shift, dtype=float))


def center(mu: Measure) -> Measure:
    return translate(mu, -mu.mean)


def rescale(mu: Measure, factor: float, epsilon: float) -> Measure:
    """Scale point coordinates by ``factor`` and attach a new epsilon."""
    pts = mu.space.points * factor
    return Measure(build_space(pts, "sqeuclidean", epsilon), mu.weights)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Balanced signed weights: a direction of motion for measures."""

    space: GroundSpace
    weights: np.ndarray

    def __post_init__(self):
        w = _check_vector(self.space, self.weights, "tangent")
        if abs(w.sum()) > MASS_TOL * max(1.0, np.abs(w).sum()):
            raise UnbalancedTangent(f"tangent has total mass {w.sum():.3e}")
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def balanced(cls, space, weights):
        """Remove the mean so the weights sum to zero."""
        w = _check_vector(space, weights, "tangent")
        return cls(space, w - w.mean())


@dataclass(frozen=True, eq=False)
class SignedVector:
    """Element of the kernel space written as ``sum_i weights[i] k(x_i, .)``."""

    space: GroundSpace
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(_check_vector(self.space, self.weights, "vector")))

    @property
    def values(self) -> np.ndarray:
        """Function values at the points of the space."""
        return self.space.gibbs @ self.weights


def _weights_of(obj, space=None):
    if hasattr(obj, "weights") and hasattr(obj, "space"):
        return obj.space, obj.weights
    if space is None:
        raise InputError("raw weight vectors need an explicit space")
    return space, _check_vector(space, obj, "weights")


def rkhs_inner(u, v, space: GroundSpace | None = None) -> float:
    """Kernel inner product ``u^T gibbs v`` of two point expansions."""
    su, wu = _weights_of(u, space)
    sv, wv = _weights_of(v, space)
    if su is not sv:
        raise IncompatibleSpaces("vectors live on different spaces")
    if wu.shape != wv.shape:
        raise InputError("dimension mismatch")
    return float(wu @ su.gibbs @ wv)


def mmd_sq(nu, space: GroundSpace | None = None) -> float:
    """Squared kernel norm ``a^T gibbs a`` of a signed measure."""
    return rkhs_inner(nu, nu, space)
