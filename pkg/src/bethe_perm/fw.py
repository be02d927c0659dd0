"""Conditional-gradient minimisation of (fractional) Bethe free energies over the Birkhoff polytope."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .energy import FracCoefficients
from .errors import AdmissibilityError, InfeasibleError
from .matrix_io import LogValue, as_matrix, matching_support, permutation_matrix
from .scaling import sinkhorn

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FwOptions:
    max_iters: int = 20_000
    dual_gap_tol: float = 1e-6
    line_search: str = "exact_bisection"
    boundary_eps: float | None = None   # default 1e-9 / n
    line_search_iters: int = 60

    def __post_init__(self):
        if not self.dual_gap_tol > 0:
            raise ValueError("dual_gap_tol must be positive")
        if self.line_search not in ("exact_bisection", "diminishing"):
            raise ValueError(f"unknown line search {self.line_search!r}")

    def eps_for(self, n: int) -> float:
        eps = 1e-9 / n if self.boundary_eps is None else self.boundary_eps
        if not 0 < eps < 1.0 / (2 * n):
            raise ValueError("boundary_eps must lie in (0, 1/(2n))")
        return eps


@dataclass
class FwResult:
    gamma_star: np.ndarray
    f_star: float
    dual_gap: float
    iterations: int
    converged: bool


def _lsa(cost: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError:
        raise InfeasibleError("no finite-cost perfect matching") from None
    total = float(cost[rows, cols].sum())
    if not math.isfinite(total):
        raise InfeasibleError("no finite-cost perfect matching")
    return cols, total


def assignment_min(cost, lexicographic: bool = True) -> tuple[int, ...]:
    """Permutation minimising sum_i cost[i, sigma(i)]; ``inf`` marks forbidden pairs.

    Among optimal permutations the lexicographically smallest is returned
    when ``lexicographic`` is set (row by row, try smaller columns and keep
    one if the best completion still reaches the optimum).
    """
    c = np.array(cost, dtype=np.float64)
    n = c.shape[0]
    sigma, best = _lsa(c)
    if not lexicographic or n == 1:
        return tuple(int(j) for j in sigma)
    tol = 1e-12 * max(1.0, abs(best))
    sigma = [int(j) for j in sigma]
    fixed_cost = 0.0
    for i in range(n - 1):
        used = set(sigma[:i])
        rest_rows = np.arange(i + 1, n)
        for j in range(sigma[i]):
            if j in used or not math.isfinite(c[i, j]):
                continue
            rest_cols = np.array([k for k in range(n) if k not in used and k != j])
            try:
                sub, sub_cost = _lsa(c[np.ix_(rest_rows, rest_cols)])
            except InfeasibleError:
                continue
            if fixed_cost + c[i, j] + sub_cost <= best + tol:
                sigma = sigma[:i] + [j] + [int(rest_cols[k]) for k in sub]
                break
        fixed_cost += c[i, sigma[i]]
    return tuple(sigma)


def _objective(theta_s: np.ndarray, a: np.ndarray, b: np.ndarray):
    """F(gamma on support) = -sum gamma log theta + sum a gamma log gamma - sum b (1-gamma) log(1-gamma)."""
    log_theta = np.log(theta_s)

    def f(g: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            gl = np.where(g > 0, g * np.log(g), 0.0)
            h = 1.0 - g
            hl = np.where(h > 0, h * np.log(h), 0.0)
        return float(np.sum(-g * log_theta + a * gl - b * hl))

    def grad(g: np.ndarray) -> np.ndarray:
        return -log_theta + a * (np.log(g) + 1.0) + b * (np.log1p(-g) + 1.0)

    return f, grad


def _line_search(phi, t_max: float, iters: int) -> float:
    lo, hi = 0.0, t_max
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    for _ in range(iters):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = phi(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = phi(x2)
    cands = [(phi(0.0), 0.0), (phi(t_max), t_max), (min(f1, f2), x1 if f1 <= f2 else x2)]
    return min(cands)[1]


def minimize_frac_bethe(m, kappa: FracCoefficients | None = None, opts: FwOptions | None = None) -> FwResult:
    """Minimise U_B - H^kappa_B over doubly stochastic matrices supported on ``m``.

    ``kappa=None`` means all ones (the ordinary Bethe free energy).  Uses
    away-step Frank-Wolfe started from the Sinkhorn-balanced 0/1 support
    pattern U.  Each vertex atom is mixed as (1 - eps) P + eps U, so every
    iterate keeps all supported entries strictly positive; the reported
    duality gap is measured against the unmixed vertex.
    """
    opts = opts or FwOptions()
    mm = as_matrix(m)
    theta = mm.entries
    n = mm.n
    if kappa is not None:
        if kappa.n != n:
            raise ValueError("kappa size does not match the matrix")
        if not kappa.admissible:
            raise AdmissibilityError("kappa violates kappa_i, kappa_j >= 0 and kappa_i + kappa_j >= 2 kappa_ij")
    allowed = matching_support(theta)
    if not allowed.any():
        raise InfeasibleError("matrix has no perfect matching on its support")
    if n == 1:
        return FwResult(np.ones((1, 1)), -math.log(theta[0, 0]), 0.0, 0, True)

    eps = opts.eps_for(n)
    sup = allowed
    if kappa is None:
        a = b = np.ones(int(sup.sum()))
    else:
        a_full, b_full = kappa.coefficient_arrays()
        a, b = a_full[sup], b_full[sup]
    f, grad = _objective(theta[sup], a, b)
    cost_full = np.full((n, n), np.inf)

    u = sinkhorn(sup.astype(float), tol=1e-14, max_iters=200_000, require_positive=False).theta_prime[sup]
    vert_cache: dict[tuple[int, ...], np.ndarray] = {}

    def vertex(sigma: tuple[int, ...]) -> np.ndarray:
        if sigma not in vert_cache:
            vert_cache[sigma] = (1.0 - eps) * permutation_matrix(sigma)[sup] + eps * u
        return vert_cache[sigma]

    # active set: None -> U, tuple -> permutation vertex
    weights: dict = {None: 1.0}
    g = u.copy()
    fg = f(g)
    gap = math.inf
    it = 0
    for it in range(1, opts.max_iters + 1):
        dg = grad(g)
        cost_full[sup] = dg
        sigma, _ = _lsa(cost_full)
        sigma = tuple(int(j) for j in sigma)
        gap = float(dg @ g - dg[permutation_matrix(sigma)[sup] > 0].sum())
        if gap <= opts.dual_gap_tol:
            break
        v = vertex(sigma)

        if opts.line_search == "diminishing":
            t = 2.0 / (it + 2.0)
            direction, step_kind = v - g, "fw"
        else:
            # away atom: worst active atom along the gradient
            away_key, away_val = None, -math.inf
            for key, w in weights.items():
                val = float(dg @ (u if key is None else vertex(key)))
                if val > away_val:
                    away_key, away_val = key, val
            away_gap = away_val - float(dg @ g) if away_val > -math.inf else -math.inf
            if gap >= away_gap:
                direction, step_kind, t_max = v - g, "fw", 1.0
            else:
                atom = u if away_key is None else vertex(away_key)
                direction, step_kind = g - atom, "away"
                w_a = weights[away_key]
                t_max = w_a / (1.0 - w_a) if w_a < 1.0 else 0.0
            t_max = max(t_max, 0.0)

            def phi(t, d=direction):
                return f(g + t * d)

            t = _line_search(phi, t_max, opts.line_search_iters)
            if t <= 0.0:
                if step_kind == "fw" or t_max <= 0.0:
                    break
                t = t_max   # drop step: removes a negligible atom from the active set

        if step_kind == "fw":
            for key in weights:
                weights[key] *= 1.0 - t
            weights[sigma] = weights.get(sigma, 0.0) + t
        else:
            for key in weights:
                weights[key] *= 1.0 + t
            weights[away_key] -= t
            if t == t_max or weights[away_key] <= 1e-15:
                del weights[away_key]
        g_new = g + t * direction
        # rebuild from the active set now and then to stop drift
        if it % 50 == 0:
            g_new = sum(w * (u if k is None else vertex(k)) for k, w in weights.items())
        g = g_new
        fg = f(g)

    gamma = np.zeros((n, n))
    gamma[sup] = g
    return FwResult(gamma, fg, max(gap, 0.0), it, gap <= opts.dual_gap_tol)


def frac_bethe_permanent(m, kappa: FracCoefficients | None = None, opts: FwOptions | None = None) -> LogValue:
    """exp(-min F^kappa_B) as a LogValue."""
    return LogValue(-minimize_frac_bethe(m, kappa, opts).f_star)
