"""Pure-numpy permanent kernels, used when the compiled extension is unavailable.

Same contract as ``_ckernels``: rows are pre-scaled into [0, 1] by the caller.
"""

from __future__ import annotations

from itertools import islice, permutations

import numpy as np

_LOW_BITS = 12
_PERM_CHUNK = 200_000


def _subset_sums(a: np.ndarray, cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row sums and subset sizes for every subset of ``cols``, in binary order."""
    k = len(cols)
    masks = np.arange(1 << k, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(a.dtype)
    sums = bits @ a[:, cols].T
    return sums, bits.sum(axis=1).astype(np.int64)


def ryser(a: np.ndarray, threads: int = 1) -> float:
    """Signed Ryser sum, split into a low/high column halves so each half is tabulated once.

    ``threads`` is accepted for signature parity and ignored.
    """
    n = a.shape[0]
    if n == 0:
        return 1.0
    low = min(n, _LOW_BITS)
    low_sums, low_sizes = _subset_sums(a, np.arange(low))
    low_sign = np.where(low_sizes % 2 == 0, 1.0, -1.0)
    if low == n:
        total = float(np.dot(low_sign, np.prod(low_sums, axis=1)))
    else:
        high_sums, high_sizes = _subset_sums(a, np.arange(low, n))
        total = 0.0
        for hs, hsize in zip(high_sums, high_sizes):
            prods = np.prod(low_sums + hs, axis=1)
            sgn = -1.0 if hsize % 2 else 1.0
            total += sgn * float(np.dot(low_sign, prods))
    return -total if n % 2 else total


def bruteforce(a: np.ndarray) -> float:
    n = a.shape[0]
    if n == 0:
        return 1.0
    rows = np.arange(n)
    total = 0.0
    it = permutations(range(n))
    while True:
        chunk = np.array(list(islice(it, _PERM_CHUNK)), dtype=np.int64)
        if chunk.size == 0:
            break
        total += float(np.prod(a[rows, chunk], axis=1).sum())
    return total
