"""Tables behind the standard plots, returned as plain rows for CSV output.

Each builder returns a dict mapping a file stem to a :class:`Table`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import closed_forms as cf
from .core import Measure, build_space
from .tensor import fd_horizontal_tensor

GAUSSIAN_CASES = ((0.05, 1.0), (1.0, 0.05), (0.5, 4.0), (2.0, 2.5))


@dataclass
class Table:
    columns: list
    rows: list
    params: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


def gaussians(eps: float = 1.0, n_t: int = 51, cases=GAUSSIAN_CASES) -> dict:
    """Variance along the divergence geodesic, the transport geodesic and the bridge."""
    rows = []
    ts = np.linspace(0.0, 1.0, n_t)
    for v0, v1 in cases:
        vt, d_hat = cf.gaussian_geodesic(v0, v1, ts, eps)
        wass = cf.wasserstein_variance_path(v0, v1, ts)
        bridge = cf.gaussian_bridge_variance(v0, v1, ts, eps)
        for t, a, b, c in zip(ts, vt, wass, bridge):
            rows.append([v0, v1, t, a, b, c, d_hat])
    columns = ["v0", "v1", "t", "divergence_geodesic", "wasserstein_geodesic", "bridge", "distance"]
    return {"gaussians": Table(columns, rows, {"eps": eps})}


def _sqrt_div(r, s, eps):
    return np.sqrt(max(cf.two_dirac_values(r, s, eps)[1], 0.0))


def triangle(eps: float = 1.0, n_grid: int = 41, radii=(1.5, 2.0, 2.5, 3.0), n_line: int = 61) -> dict:
    """Triangle defect of the square-root divergence on symmetric Dirac pairs.

    The heatmap goes from ``mu_s`` to ``mu_r`` through ``mu_sqrt(eps)`` with
    ``s`` in ``[0, sqrt(eps)]`` and ``r`` in ``[sqrt(eps), 2 sqrt(eps)]``. The
    line table fixes ``s = 0`` and moves the intermediate radius ``t`` over
    ``[0, r]``. Gaps are divided by ``sqrt(eps)``; positive values break the
    triangle inequality.
    """
    root = np.sqrt(eps)
    heat = []
    for s in np.linspace(0.0, root, n_grid):
        for r in np.linspace(root, 2.0 * root, n_grid):
            gap = _sqrt_div(s, r, eps) - _sqrt_div(s, root, eps) - _sqrt_div(root, r, eps)
            heat.append([s, r, gap / root])
    line = []
    for r in radii:
        r = r * root
        for t in np.linspace(0.0, r, n_line):
            gap = _sqrt_div(0.0, r, eps) - _sqrt_div(0.0, t, eps) - _sqrt_div(t, r, eps)
            line.append([r, t, gap / root])
    return {
        "triangle_heatmap": Table(["s", "r", "gap"], heat, {"eps": eps, "via": root}),
        "triangle_line": Table(["r", "t", "gap"], line, {"eps": eps, "s": 0.0}),
    }


def _spreading_tensor(r, m, eps):
    space = build_space([[-r], [r]], "sqeuclidean", eps)
    mu = Measure(space, [m, 1.0 - m])
    return fd_horizontal_tensor(mu, [[-1.0], [1.0]])


def nonconvexity(eps_values=(1.0, 2.0, 4.0), n_m: int = 41, r_fixed: float = 1.0, n_r: int = 121,
                 r_max: float = 3.0) -> dict:
    """Metric tensor of two point masses moving apart at unit speed.

    ``over_m`` fixes ``r`` and varies the mass ``m`` at ``-r`` (finite
    differences of the generic divergence). ``over_r`` fixes ``m = 1/2`` and
    varies ``r / sqrt(eps)`` (closed form). The transport value is one.
    """
    over_m = []
    for eps in eps_values:
        for m in np.linspace(0.0, 1.0, n_m)[1:-1]:
            over_m.append([eps, m, _spreading_tensor(r_fixed, m, eps)])
    over_r = [[x, cf.nonconvexity_value(x, 1.0)] for x in np.linspace(0.0, r_max, n_r)]
    return {
        "nonconvexity_over_m": Table(["eps", "m", "tensor"], over_m, {"r": r_fixed}),
        "nonconvexity_over_r": Table(["r_over_sqrt_eps", "tensor"], over_r,
                                     {"m": 0.5, "threshold": cf.nonconvexity_threshold(1.0)}),
    }


def twopoint(eps: float = 1.0, radii=(0.1, 0.5, 1.0, 2.0), n_m: int = 41) -> dict:
    """Two-point space: tensor, exchanged mass and second eigenvalue over ``m``."""
    rows = []
    for r in radii:
        for m in np.linspace(0.0, 1.0, n_m)[1:-1]:
            state = cf.TwoPointState(r, m, eps)
            rows.append([r, m, cf.two_point_tensor(state, 1.0), state.p, state.lambda2])
    return {"twopoint": Table(["r", "m", "tensor", "exchanged_mass", "lambda2"], rows, {"eps": eps})}


BUILDERS = {
    "gaussians": gaussians,
    "triangle": triangle,
    "nonconvexity": nonconvexity,
    "twopoint": twopoint,
}
