"""Shared hypothesis strategies."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bethe_perm.scaling import sinkhorn


def positive_matrices(min_n=2, max_n=6, low=0.05, high=10.0):
    return st.integers(min_n, max_n).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.floats(low, high, allow_nan=False)))


def sparse_matrices(min_n=2, max_n=8):
    entry = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))
    return st.integers(min_n, max_n).flatmap(lambda n: arrays(np.float64, (n, n), elements=entry))


def simplex_points(n):
    return arrays(np.float64, n, elements=st.floats(1e-3, 1.0)).map(lambda v: v / v.sum())


def interior_doubly_stochastic(min_n=2, max_n=5):
    return positive_matrices(min_n, max_n, 0.05, 1.0).map(
        lambda a: sinkhorn(a, tol=1e-13).theta_prime)
