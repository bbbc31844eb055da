"""
The metric tensor of the divergence
===================================

The divergence is locally quadratic around the diagonal. Its Hessian
defines a Riemannian metric on measures, computed here from the
self-transport kernel and checked against finite differences.
"""

# %%
import numpy as np

from sinkhorn_geometry.core import Measure, TangentVector, build_space
from sinkhorn_geometry.tensor import (
    beta_dot_from_mu_dot,
    fd_vertical_tensor,
    map_A,
    map_A_inverse,
    metric_tensor,
    self_transport,
    spectral_report,
    tilde_metric_tensor,
)

rng = np.random.default_rng(0)
space = build_space(rng.random((6, 2)), "sqeuclidean", 0.4)
mu = Measure.normalized(space, rng.uniform(0.2, 1.0, 6))
b = TangentVector.balanced(space, rng.normal(size=6))

# %%
# The self-transport potential gives a row-stochastic kernel ``K``.
st = self_transport(mu)
print("row sums of K:", np.round(st.K.sum(axis=1), 14))

# %%
# Tensor from the kernel against a Richardson-extrapolated second
# difference of ``t -> S(mu, mu + t b)``.
g = metric_tensor(st, b)
print(f"kernel formula {g:.12f}")
print(f"finite diffs   {fd_vertical_tensor(mu, b):.12f}")

# %%
# In the embedded coordinates ``exp(-f / eps)`` the same tangent has the
# same length.
print(f"embedded       {tilde_metric_tensor(st, beta_dot_from_mu_dot(st, b)):.12f}")

# %%
# The spectrum of ``K`` has a simple top eigenvalue and a gap controlled by
# the diameter of the space.
rep = spectral_report(st)
print("eigenvalues", np.round(rep.eigenvalues, 6))
print("second eigenvalue", rep.eigenvalues[1], "<= bound", rep.q_bound)

# %%
# The rescaling ``mu -> exp(f / eps) mu`` lands on the unit sphere of the
# kernel space and can be undone.
alpha = map_A(mu, st)
print("kernel norm", alpha @ space.gibbs @ alpha)
print("round trip error", np.abs(map_A_inverse(alpha, space).weights - mu.weights).max())
