"""Exact permanents: brute-force enumeration and Ryser's inclusion-exclusion formula."""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .errors import NumericalError, SizeError
from .matrix_io import LogValue, as_array, matching_support, validate_support

BRUTE_MAX_N = 10
RYSER_MAX_N = 30
BALANCE_TOL = 1e-3


def _scaled_rows(a: np.ndarray) -> tuple[np.ndarray | None, float]:
    """Divide each row by its largest entry; returns (scaled, sum of log factors).

    ``None`` signals an all-zero row, i.e. a zero permanent.
    """
    row_max = a.max(axis=1)
    if np.any(row_max <= 0):
        return None, 0.0
    scaled = np.ascontiguousarray(a / row_max[:, None], dtype=np.float64)
    return scaled, float(np.log(row_max).sum())


def _balanced(a: np.ndarray, sweeps: int = 200) -> tuple[np.ndarray | None, float, bool]:
    """Prepare a matrix for Ryser: drop entries on no perfect matching, then
    alternately normalise row and column sums for a few sweeps.

    Neither step changes the permanent beyond the returned log factor, but the
    near doubly stochastic result keeps the alternating sum from cancelling
    away when the entries span many orders of magnitude.
    """
    if not validate_support(a).has_perfect_matching:
        return None, 0.0, True
    b = np.where(matching_support(a), a, 0.0)
    b, log_scale = _scaled_rows(b)
    for _ in range(sweeps):
        c = b.sum(axis=0)
        b = b / c
        r = b.sum(axis=1)
        b = b / r[:, None]
        log_scale += float(np.log(c).sum() + np.log(r).sum())
        if np.max(np.abs(b.sum(axis=0) - 1.0)) < BALANCE_TOL:
            return np.ascontiguousarray(b), log_scale, True
    return np.ascontiguousarray(b), log_scale, False


def perm_bruteforce(m) -> LogValue:
    """Permanent by summing the diagonal product of every permutation (n <= 10)."""
    a = as_array(m)
    n = a.shape[0]
    if n > BRUTE_MAX_N:
        raise SizeError(f"brute force is capped at n = {BRUTE_MAX_N}, got n = {n}")
    scaled, log_scale = _scaled_rows(a)
    if scaled is None:
        return LogValue.zero()
    val = kernels.bruteforce(scaled)
    if val <= 0:
        return LogValue.zero()
    return LogValue(math.log(val) + log_scale)


def perm_ryser(m, threads: int = 1) -> LogValue:
    """Permanent by Ryser's formula with Gray-code subset order, Theta(n 2^n).

    The matrix is first pruned and balanced (see ``_balanced``) and the log
    scale is added back.  If balancing fails (entries spanning hundreds of
    orders of magnitude) and n <= 10, the cancellation-free enumeration is
    used instead. ``threads > 1`` only has an effect with the
    compiled kernels, and the result is identical for every thread count.
    """
    a = as_array(m)
    n = a.shape[0]
    if n > RYSER_MAX_N:
        raise SizeError(f"Ryser is capped at n = {RYSER_MAX_N}, got n = {n}")
    scaled, log_scale, balanced = _balanced(a)
    if scaled is None:
        return LogValue.zero()
    val = kernels.ryser(scaled, threads) if balanced else math.nan
    if not val > 0 and n <= BRUTE_MAX_N:
        # badly scaled input: the all-positive sum cannot cancel
        val = kernels.bruteforce(scaled)
    if not val > 0:
        raise NumericalError(f"Ryser sum lost all precision (got {val!r})")
    return LogValue(math.log(val) + log_scale)


def permanent(m, method: str = "ryser", threads: int = 1) -> LogValue:
    if method == "brute":
        return perm_bruteforce(m)
    if method == "ryser":
        return perm_ryser(m, threads=threads)
    raise ValueError(f"unknown method {method!r}")
