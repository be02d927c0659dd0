"""Sum-product algorithm on the complete bipartite factor graph of a matrix.

Messages are kept as inverse likelihood ratios: ``v_right[i, j]`` travels from
row node i to column node j, ``v_left[i, j]`` the other way.  One iteration
updates all right-going messages from the left-going ones, then all
left-going messages from the fresh right-going ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, SupportError
from .matrix_io import (
    LogValue,
    as_array,
    as_matrix,
    matching_support,
    support_components,
    validate_support,
)


@dataclass(frozen=True)
class SpaOptions:
    max_iters: int = 10_000
    tol: float = 1e-10
    gauge: str = "normalize_left_max"
    oscillation_window: int = 20
    init: str = "uniform"
    seed: int | None = None
    fdelta_tol: float = 1e-12
    fdelta_count: int = 10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.gauge not in ("normalize_left_max", "none"):
            raise ValueError(f"unknown gauge {self.gauge!r}")
        if self.init not in ("uniform", "random"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True, eq=False)
class MessageState:
    v_left: np.ndarray
    v_right: np.ndarray
    iteration: int = 0


@dataclass
class SpaResult:
    log_perm_bethe: LogValue
    gamma: np.ndarray
    converged: bool
    iterations_used: int
    pseudo_dual_trace: list[float] = field(default_factory=list)
    oscillation_detected: bool = False
    method: str = "spa"
    belief_disagreement: float = 0.0

    @property
    def perm_bethe(self) -> float:
        return self.log_perm_bethe.value


def _exclusive_sums(w: np.ndarray, axis: int) -> np.ndarray:
    """Sum over the other entries of each row (axis=1) or column (axis=0).

    Built from prefix and suffix sums so no large term is ever subtracted.
    """
    if axis == 0:
        return _exclusive_sums(w.T, 1).T
    n = w.shape[1]
    out = np.zeros_like(w)
    pre = np.cumsum(w, axis=1)
    suf = np.cumsum(w[:, ::-1], axis=1)[:, ::-1]
    out[:, 1:] += pre[:, :-1]
    out[:, :-1] += suf[:, 1:]
    if n == 1:
        out[:] = 0.0
    return out


def init_messages(m, opts: SpaOptions | None = None) -> MessageState:
    """Uniform (all ones) or log-uniform random in [1/e, e] on the support, zero elsewhere."""
    opts = opts or SpaOptions()
    theta = as_array(m)
    if not validate_support(theta).has_perfect_matching:
        raise SupportError("matrix has no perfect matching on its support")
    sup = theta > 0
    if opts.init == "random":
        rng = np.random.default_rng(opts.seed)
        vl = np.exp(rng.uniform(-1.0, 1.0, size=theta.shape))
    else:
        vl = np.ones_like(theta)
    vl = np.where(sup, vl, 0.0)
    return MessageState(vl, np.where(sup, 1.0, 0.0), 0)


def _gauge(vl: np.ndarray, vr: np.ndarray, sup: np.ndarray, labels: np.ndarray | None):
    if labels is None:
        scale = np.max(vl[sup])
        return vl / scale, vr * scale
    factor = np.ones_like(vl)
    for c in np.unique(labels[sup]):
        sel = sup & (labels == c)
        factor[sel] = np.max(vl[sel])
    return vl / factor, vr * factor


def spa_iterate(state: MessageState, m, gauge: bool = True, edge_labels: np.ndarray | None = None) -> MessageState:
    """One full undamped iteration (right half, then left half).

    With ``gauge`` the left-going messages are divided by their maximum (per
    connected component when ``edge_labels`` is given) and the right-going
    ones multiplied by the same factor; beliefs and the pseudo-dual are
    unaffected.
    """
    theta = as_array(m)
    sup = theta > 0
    sq = np.sqrt(theta)

    den = _exclusive_sums(sq * state.v_left, axis=1)
    if np.any(den[sup] <= 0) or not np.all(np.isfinite(den[sup])):
        raise NumericalError("right-going update has a vanishing denominator")
    vr = np.zeros_like(theta)
    vr[sup] = sq[sup] / den[sup]

    den = _exclusive_sums(sq * vr, axis=0)
    if np.any(den[sup] <= 0) or not np.all(np.isfinite(den[sup])):
        raise NumericalError("left-going update has a vanishing denominator")
    vl = np.zeros_like(theta)
    vl[sup] = sq[sup] / den[sup]

    if gauge:
        vl, vr = _gauge(vl, vr, sup, edge_labels)
    return MessageState(vl, vr, state.iteration + 1)


def beliefs(state: MessageState, m) -> tuple[np.ndarray, float]:
    """Row-node beliefs as a matrix, plus max |row belief - column belief|."""
    sq = np.sqrt(as_array(m))
    wl = sq * state.v_left
    gamma = wl / wl.sum(axis=1, keepdims=True)
    wr = sq * state.v_right
    col = wr / wr.sum(axis=0, keepdims=True)
    return gamma, float(np.max(np.abs(gamma - col)))


def pseudo_dual(state: MessageState, m) -> float:
    """Pseudo-dual of the Bethe free energy; equals F_B(beliefs) at a fixed point."""
    sq = np.sqrt(as_array(m))
    rows = np.log((sq * state.v_left).sum(axis=1)).sum()
    cols = np.log((sq * state.v_right).sum(axis=0)).sum()
    edges = np.log1p(state.v_left * state.v_right).sum()
    return float(-rows - cols + edges)


# --------------------------------------------------------------------------
# driver

@dataclass
class _Reduced:
    theta: np.ndarray          # reduced matrix restricted to matching support
    rows: np.ndarray
    cols: np.ndarray
    forced: list[tuple[int, int]]
    log_forced: float
    edge_labels: np.ndarray
    balanced_cycle: bool


def _reduce(theta: np.ndarray) -> _Reduced:
    """Drop edges on no perfect matching and peel off forced (isolated) edges."""
    allowed = matching_support(theta)
    row_lab, col_lab, count = support_components(allowed)
    forced = []
    keep_rows = np.ones(theta.shape[0], dtype=bool)
    keep_cols = np.ones(theta.shape[0], dtype=bool)
    for c in range(count):
        rr = np.flatnonzero(row_lab == c)
        cc = np.flatnonzero(col_lab == c)
        if len(rr) == 1 and len(cc) == 1:
            forced.append((int(rr[0]), int(cc[0])))
            keep_rows[rr] = False
            keep_cols[cc] = False
    rows = np.flatnonzero(keep_rows)
    cols = np.flatnonzero(keep_cols)
    red = np.where(allowed, theta, 0.0)[np.ix_(rows, cols)]
    log_forced = float(sum(math.log(theta[i, j]) for i, j in forced))
    labels = np.broadcast_to(row_lab[rows][:, None], red.shape).copy()
    return _Reduced(red, rows, cols, forced, log_forced, labels, _has_balanced_cycle(red))


def _has_balanced_cycle(theta: np.ndarray) -> bool:
    """True if a support component is a single even cycle whose two
    alternating edge classes have equal weight products (the SPA then
    oscillates instead of converging)."""
    if theta.size == 0:
        return False
    sup = theta > 0
    row_lab, col_lab, count = support_components(sup)
    for c in range(count):
        rr = np.flatnonzero(row_lab == c)
        cc = np.flatnonzero(col_lab == c)
        sub = sup[np.ix_(rr, cc)]
        if len(rr) < 2 or np.any(sub.sum(axis=1) != 2) or np.any(sub.sum(axis=0) != 2):
            continue
        # walk the cycle, alternating between the two edge classes
        w = theta[np.ix_(rr, cc)]
        logs = [0.0, 0.0]
        i, j_prev, k = 0, -1, 0
        for _ in range(2 * len(rr)):
            js = [j for j in np.flatnonzero(sub[i]) if j != j_prev]
            j = js[0]
            logs[k % 2] += math.log(w[i, j])
            k += 1
            i_next = [r for r in np.flatnonzero(sub[:, j]) if r != i][0]
            logs[k % 2] += math.log(w[i_next, j])
            k += 1
            i, j_prev = i_next, j
            if i == 0:
                break
        if abs(logs[0] - logs[1]) <= 1e-12 * max(1.0, abs(logs[0])):
            return True
    return False


def _embed(red: _Reduced, gamma_red: np.ndarray, n: int) -> np.ndarray:
    gamma = np.zeros((n, n))
    gamma[np.ix_(red.rows, red.cols)] = gamma_red
    for i, j in red.forced:
        gamma[i, j] = 1.0
    return gamma


def run_spa(m, opts: SpaOptions | None = None) -> SpaResult:
    """Run the SPA to convergence and return the Bethe permanent.

    ``log_perm_bethe`` is minus the final pseudo-dual.  The run stops when
    the beliefs move by at most ``tol`` and row and column beliefs agree to
    ``10 tol`` (``converged``) or when F# has been
    flat for ``fdelta_count`` iterations (value kept, ``converged`` False
    unless the beliefs also settled).  When the support has
    a balanced cycle component, when a period-2 belief oscillation is seen,
    or when the iteration budget runs out without F# settling, the minimum is instead found by
    Frank-Wolfe on the Bethe free energy (``method == "frank_wolfe"``).
    """
    opts = opts or SpaOptions()
    mm = as_matrix(m)
    theta = mm.entries
    n = mm.n
    if not validate_support(theta).has_perfect_matching:
        raise SupportError("matrix has no perfect matching on its support")
    if n == 1:
        return SpaResult(LogValue(math.log(theta[0, 0])), np.ones((1, 1)), True, 0)

    red = _reduce(theta)
    if red.theta.size == 0:
        gamma = _embed(red, np.zeros((0, 0)), n)
        return SpaResult(LogValue(red.log_forced), gamma, True, 0)

    if red.balanced_cycle:
        return _fallback(mm, red, n, [], 0, oscillation=True, converged=False)

    labels = red.edge_labels if len(np.unique(red.edge_labels)) > 1 else None
    gauge = opts.gauge == "normalize_left_max"
    offset = -red.log_forced
    state = init_messages(red.theta, opts)
    hist = [beliefs(state, red.theta)[0]]
    trace: list[float] = []
    converged = plateau = False
    osc_run = 0
    flat_run = 0
    disagreement = math.inf
    try:
        for _ in range(opts.max_iters):
            state = spa_iterate(state, red.theta, gauge=gauge, edge_labels=labels)
            gamma, disagreement = beliefs(state, red.theta)
            f = pseudo_dual(state, red.theta) + offset
            if trace and abs(f - trace[-1]) <= opts.fdelta_tol:
                flat_run += 1
            else:
                flat_run = 0
            trace.append(f)
            change = float(np.max(np.abs(gamma - hist[-1])))
            if len(hist) >= 2:
                back2 = float(np.max(np.abs(gamma - hist[-2])))
                osc_run = osc_run + 1 if back2 <= opts.tol and change > 100 * opts.tol else 0
            hist = [hist[-1], gamma]
            # a small step alone can hide slow drift; also require row and column beliefs to agree
            if change <= opts.tol and disagreement <= 10 * opts.tol:
                converged = True
                break
            if flat_run >= opts.fdelta_count:
                # F# has settled; keep the value but only claim convergence on beliefs
                plateau = True
                break
            if osc_run >= opts.oscillation_window:
                return _fallback(mm, red, n, trace, state.iteration, oscillation=True, converged=False)
    except NumericalError:
        return _fallback(mm, red, n, trace, state.iteration, oscillation=False, converged=False)

    if not (converged or plateau):
        return _fallback(mm, red, n, trace, state.iteration, oscillation=False, converged=False)
    return SpaResult(
        log_perm_bethe=LogValue(-trace[-1]),
        gamma=_embed(red, hist[-1], n),
        converged=converged,
        iterations_used=state.iteration,
        pseudo_dual_trace=trace,
        oscillation_detected=False,
        method="spa",
        belief_disagreement=disagreement,
    )


def _fallback(mm, red: _Reduced, n, trace, iters, *, oscillation, converged) -> SpaResult:
    from .fw import minimize_frac_bethe

    res = minimize_frac_bethe(mm)
    return SpaResult(
        log_perm_bethe=LogValue(-res.f_star),
        gamma=res.gamma_star,
        converged=converged,
        iterations_used=iters,
        pseudo_dual_trace=list(trace),
        oscillation_detected=oscillation,
        method="frank_wolfe",
        belief_disagreement=0.0,
    )
