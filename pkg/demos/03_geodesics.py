"""
Geodesics and bridges
=====================

Approximate the geodesic distance by minimizing a chain of divergences,
then contrast the geodesic with the entropic bridge between the same
endpoints.
"""

# %%
import numpy as np

from sinkhorn_geometry.core import Measure, build_space, point_measure, translate
from sinkhorn_geometry.geodesics import bridge_marginal, solve_geodesic

# %%
# A Dirac travelling from 0 to 1 on a fine grid. The geodesic distance of
# a moving Dirac equals the distance it travels.
grid = np.round(np.arange(-0.25, 1.2501, 0.05), 12)
space = build_space(grid, "sqeuclidean", 1.0)
start, end = np.zeros(space.n), np.zeros(space.n)
start[np.argmin(np.abs(grid))] = end[np.argmin(np.abs(grid - 1.0))] = 1.0
res = solve_geodesic(Measure(space, start), Measure(space, end), n_steps=16)
print(f"distance estimate {res.ds_estimate:.6f} after {res.iterations} iterations")
print(f"tensor energy {res.energy:.6f}, bounds [{res.lower_bound:.4f}, {res.upper_bound:.3g}]")
for t, m in zip(res.path.times[::4], res.path.steps[::4]):
    print(f"t={t:.2f}  mean position {m.weights @ grid:+.4f}")

# %%
# Translating a measure costs the length of the shift.
mu = point_measure([[0.0, 0.0], [0.4, 0.1], [0.2, 0.5]], [0.2, 0.5, 0.3], epsilon=0.5)
u = np.array([0.3, -0.4])
print("translation estimate", solve_geodesic(mu, translate(mu, u), n_steps=8).ds_estimate, "shift", np.linalg.norm(u))

# %%
# Between a Dirac and itself the geodesic stays put, while the entropic
# bridge spreads out into a Gaussian of variance ``t (1 - t) eps / 2``.
d0 = point_measure([[0.0]], [1.0], epsilon=1.0)
x = np.linspace(-1.5, 1.5, 7)
for t in (0.1, 0.5, 0.9):
    print(f"t={t}", np.round(bridge_marginal(d0, d0, t, x), 4))
