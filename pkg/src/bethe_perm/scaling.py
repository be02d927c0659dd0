"""Sinkhorn row/column scaling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PositivityError
from .matrix_io import as_array


@dataclass
class SinkhornResult:
    theta_prime: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    converged: bool
    iterations: int

    @property
    def log_scale(self) -> float:
        """log of prod(d1) * prod(d2), the factor relating perm(theta) to perm(theta')."""
        return float(np.log(self.d1).sum() + np.log(self.d2).sum())


def sinkhorn(m, tol: float = 1e-10, max_iters: int = 100_000, require_positive: bool = True) -> SinkhornResult:
    """Write ``m = D1 @ theta_prime @ D2`` with ``theta_prime`` doubly stochastic.

    Rows are normalised first, then columns, until every row sum is within
    ``tol`` of one (column sums are exact after each sweep).  The free scalar
    between D1 and D2 is fixed so that prod(d1) == prod(d2).

    With ``require_positive=False`` zero entries are allowed; convergence then
    needs the zero pattern to have total support.
    """
    a = as_array(m)
    if require_positive and np.any(a <= 0):
        raise PositivityError("sinkhorn needs strictly positive entries")
    n = a.shape[0]
    r = np.ones(n)
    c = np.ones(n)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        r = 1.0 / (a @ c)
        c = 1.0 / (a.T @ r)
        row_sums = r * (a @ c)
        if np.max(np.abs(row_sums - 1.0)) <= tol:
            converged = True
            break
    log_alpha = (np.log(c).sum() - np.log(r).sum()) / (2 * n)
    r = r * np.exp(log_alpha)
    c = c * np.exp(-log_alpha)
    theta_prime = r[:, None] * a * c[None, :]
    return SinkhornResult(theta_prime, 1.0 / r, 1.0 / c, converged, it)
