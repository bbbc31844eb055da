"""
Exact geodesics and where intuition fails
=========================================

Centered Gaussians on the line have explicit geodesics. Two point masses
spreading apart show that the divergence is not geodesically convex in
the transport sense.
"""

# %%
import numpy as np

from sinkhorn_geometry import closed_forms as cf
from sinkhorn_geometry.core import point_measure
from sinkhorn_geometry.tensor import fd_horizontal_tensor

# %%
# Variance along three interpolations from N(0, 0.05) to N(0, 1).
eps = 1.0
ts = np.linspace(0.0, 1.0, 6)
vt, d_hat = cf.gaussian_geodesic(0.05, 1.0, ts, eps)
print(f"geodesic length {d_hat:.6f}")
print("t        divergence  transport   bridge")
for t, a, b, c in zip(ts, vt, cf.wasserstein_variance_path(0.05, 1.0, ts),
                      cf.gaussian_bridge_variance(0.05, 1.0, ts, eps)):
    print(f"{t:.1f}  {a:10.6f}  {b:10.6f}  {c:10.6f}")

# %%
# The metric tensor on variances interpolates between ``1 / eps`` at a
# Dirac and the transport tensor ``1 / (4 v)`` for wide Gaussians.
for v in (0.0, 0.1, 1.0, 10.0):
    print(f"v={v:5.1f}  g={cf.gaussian_metric(v, eps):.6f}  1/(4v)={1 / (4 * v) if v else np.inf:.6f}")

# %%
# Two masses at ``-r`` and ``r`` moving apart at unit speed. Transport
# assigns this motion squared speed one. The divergence tensor is below one
# for close masses and above one past a critical radius.
r_star = cf.nonconvexity_threshold(eps)
print(f"critical radius {r_star:.6f} (sqrt(eps/2) = {np.sqrt(eps / 2):.6f})")
for r in (0.3, 0.5, r_star, 0.8, 1.2):
    mu = point_measure([[-r], [r]], epsilon=eps)
    fd = fd_horizontal_tensor(mu, [[-1.0], [1.0]])
    print(f"r={r:.4f}  formula={cf.nonconvexity_value(r, eps):.8f}  finite diffs={fd:.8f}")
