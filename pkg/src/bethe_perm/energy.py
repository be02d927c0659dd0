"""Bethe and fractional-Bethe free energies over the Birkhoff polytope.

All functions take ``gamma`` as an n x n array (or DoublyStochastic) and the
weight matrix ``m``.  Entries where ``m`` is zero are absent edges: they must
carry no mass and are skipped, so ``log(0)`` of a weight is never taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryError, DomainError, SupportError
from .matrix_io import as_array

CLAMP = 1e-15
SIMPLEX_TOL = 1e-9


def _xlogx(x: np.ndarray) -> np.ndarray:
    """Elementwise x log x with 0 log 0 = 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _clamp(g: np.ndarray) -> np.ndarray:
    g = np.array(g, dtype=np.float64, copy=True)
    g[np.abs(g) < CLAMP] = 0.0
    g[np.abs(g - 1.0) < CLAMP] = 1.0
    return g


def s_func(xi: float) -> float:
    """s(xi) = -xi log xi + (1 - xi) log(1 - xi) on [0, 1]."""
    if not 0.0 <= xi <= 1.0:
        raise DomainError(f"s is defined on [0, 1], got {xi!r}")
    return float(-_xlogx(xi) + _xlogx(1.0 - xi))


def S_func(xi) -> float:
    """Sum of s over the entries of a probability vector."""
    v = np.asarray(xi, dtype=np.float64)
    if v.ndim != 1 or np.any(v < 0) or np.any(v > 1) or abs(v.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError("S expects a probability vector")
    return float(np.sum(-_xlogx(v) + _xlogx(1.0 - v)))


def _prepare(gamma, m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = _clamp(as_array(gamma))
    theta = as_array(m)
    if g.shape != theta.shape:
        raise SupportError(f"gamma shape {g.shape} does not match matrix shape {theta.shape}")
    sup = theta > 0
    if np.any(g[~sup] > 0):
        raise SupportError("gamma puts mass on an entry where the matrix is zero")
    return g, theta, sup


def bethe_avg_energy(gamma, m) -> float:
    """U_B(gamma) = -sum gamma log theta over the support."""
    g, theta, sup = _prepare(gamma, m)
    return float(-np.sum(g[sup] * np.log(theta[sup])))


def bethe_entropy(gamma, m=None) -> float:
    """H_B(gamma) = -sum gamma log gamma + sum (1 - gamma) log(1 - gamma)."""
    if m is None:
        g = _clamp(as_array(gamma))
    else:
        g, _, _ = _prepare(gamma, m)
    return float(np.sum(-_xlogx(g) + _xlogx(1.0 - g)))


def bethe_free_energy(gamma, m) -> float:
    return bethe_avg_energy(gamma, m) - bethe_entropy(gamma, m)


def bethe_entropy_via_S(gamma) -> float:
    """Same entropy written as half the row-wise plus half the column-wise S sums."""
    g = _clamp(as_array(gamma))
    rows = sum(np.sum(-_xlogx(r) + _xlogx(1.0 - r)) for r in g)
    cols = sum(np.sum(-_xlogx(c) + _xlogx(1.0 - c)) for c in g.T)
    return float(0.5 * rows + 0.5 * cols)


def grad_bethe_free_energy(gamma, m) -> np.ndarray:
    """Gradient of F_B on the support; zero on absent edges.

    d F_B / d gamma_ij = -log theta_ij + log gamma_ij + log(1 - gamma_ij) + 2
    """
    return grad_frac_free_energy(gamma, m, None)


@dataclass(frozen=True, eq=False)
class FracCoefficients:
    """Per-row, per-column and per-edge weights of the fractional entropy."""

    kappa_rows: np.ndarray
    kappa_cols: np.ndarray
    kappa_edges: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.kappa_rows, dtype=np.float64)
        c = np.asarray(self.kappa_cols, dtype=np.float64)
        e = np.asarray(self.kappa_edges, dtype=np.float64)
        n = r.shape[0]
        if r.shape != (n,) or c.shape != (n,) or e.shape != (n, n):
            raise ValueError("kappa shapes must be (n,), (n,), (n, n)")
        for name, arr in (("kappa_rows", r), ("kappa_cols", c), ("kappa_edges", e)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.kappa_rows.shape[0]

    @property
    def admissible(self) -> bool:
        """kappa_i >= 0, kappa_j >= 0 and kappa_i + kappa_j >= 2 kappa_ij everywhere."""
        r, c, e = self.kappa_rows, self.kappa_cols, self.kappa_edges
        return bool(
            np.all(r >= 0) and np.all(c >= 0) and np.all(r[:, None] + c[None, :] >= 2 * e - 1e-15)
        )

    def coefficient_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(weight on gamma log gamma, weight on (1 - gamma) log(1 - gamma))."""
        node = self.kappa_rows[:, None] + self.kappa_cols[None, :]
        return node - self.kappa_edges, self.kappa_edges

    @classmethod
    def ones(cls, n: int) -> "FracCoefficients":
        return cls(np.ones(n), np.ones(n), np.ones((n, n)))

    @classmethod
    def from_json(cls, doc: dict) -> "FracCoefficients":
        return cls(doc["kappa_rows"], doc["kappa_cols"], doc["kappa_edges"])


def special_kappa(n: int) -> FracCoefficients:
    """Node weights 1 and edge weights 1 - 1/(2n)."""
    if n < 1:
        raise ValueError("n must be positive")
    return FracCoefficients(np.ones(n), np.ones(n), np.full((n, n), 1.0 - 1.0 / (2 * n)))


def frac_entropy(gamma, m, kappa: FracCoefficients) -> float:
    g, _, _ = _prepare(gamma, m)
    a, b = kappa.coefficient_arrays()
    return float(np.sum(-a * _xlogx(g) + b * _xlogx(1.0 - g)))


def frac_free_energy(gamma, m, kappa: FracCoefficients) -> float:
    return bethe_avg_energy(gamma, m) - frac_entropy(gamma, m, kappa)


def grad_frac_free_energy(gamma, m, kappa: FracCoefficients | None) -> np.ndarray:
    g, theta, sup = _prepare(gamma, m)
    gs = g[sup]
    if np.any(gs <= 0) or np.any(gs >= 1):
        raise BoundaryError("gradient needs 0 < gamma < 1 on every supported entry")
    if kappa is None:
        a = b = np.ones_like(gs)
    else:
        a_full, b_full = kappa.coefficient_arrays()
        a, b = a_full[sup], b_full[sup]
    out = np.zeros_like(g)
    out[sup] = -np.log(theta[sup]) + a * (np.log(gs) + 1.0) + b * (np.log1p(-gs) + 1.0)
    return out
