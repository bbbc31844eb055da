"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st

from sinkhorn_geometry.core import Measure, TangentVector, build_space


@st.composite
def instances(draw, n_max=6, d_max=3, eps=(0.3, 3.0)):
    """Random weighted point cloud with a balanced tangent on its support."""
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(2, n_max))
    d = draw(st.integers(1, d_max))
    epsilon = draw(st.floats(*eps))
    space = build_space(rng.random((n, d)), "sqeuclidean", epsilon)
    mu = Measure.normalized(space, rng.uniform(0.1, 1.0, n))
    b = TangentVector.balanced(space, rng.normal(size=n))
    return mu, b, rng
