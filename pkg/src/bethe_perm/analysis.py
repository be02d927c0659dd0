"""Vertex classification of the Bethe minimum, spectral radii, scaling and bound checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .energy import special_kappa
from .errors import InfeasibleError, SupportError
from .exact import RYSER_MAX_N, perm_ryser
from .fw import assignment_min, frac_bethe_permanent
from .matrix_io import LogValue, as_array, as_matrix, validate_support
from .scaling import SinkhornResult, sinkhorn
from .spa import SpaOptions, run_spa

__all__ = [
    "SinkhornResult",
    "best_permutation",
    "bounds_report",
    "classify_vertex",
    "regular_bethe_bound",
    "sinkhorn",
    "spectral_radius",
    "vertex_transition_matrix",
]

RHO_BAND = 1e-9


def best_permutation(m) -> tuple[int, ...]:
    """Permutation with the largest diagonal product (ties: lexicographically smallest)."""
    theta = as_array(m)
    if not validate_support(theta).has_perfect_matching:
        raise InfeasibleError("matrix has no perfect matching on its support")
    with np.errstate(divide="ignore"):
        cost = np.where(theta > 0, -np.log(theta), np.inf)
    return assignment_min(cost)


def vertex_transition_matrix(m, sigma) -> np.ndarray:
    """A[i, i'] = theta[i, sigma(i')] / theta[i, sigma(i)] off the diagonal, 0 on it."""
    theta = as_array(m)
    sigma = np.asarray(sigma)
    diag = theta[np.arange(len(sigma)), sigma]
    if np.any(diag <= 0):
        raise SupportError("sigma uses a zero entry of the matrix")
    a = theta[:, sigma] / diag[:, None]
    np.fill_diagonal(a, 0.0)
    return a


@dataclass
class SpectralResult:
    rho: float
    left_vec: np.ndarray
    right_vec: np.ndarray
    converged: bool
    iterations: int


def _balance(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal similarity D^-1 A D with comparable row and column norms.

    Eigenvalues are unchanged; power iteration on the balanced matrix is far
    better conditioned when entries span many orders of magnitude.
    """
    from scipy.linalg import matrix_balance

    b, (scale, _) = matrix_balance(a, permute=False, separate=True)
    return b, scale


def _shift(a: np.ndarray) -> float:
    """Diagonal shift on the scale of the matrix (its largest row sum)."""
    s = float(a.sum(axis=1).max()) if a.size else 0.0
    return s if s > 0 else 1.0


def _power_iteration(b: np.ndarray, tol: float, max_iters: int, bracket: bool):
    """Power iteration on an already shifted non-negative matrix.

    With ``bracket`` the stop is the Collatz-Wielandt bracket min/max of
    (Bx)_i / x_i closing to relative ``tol`` (valid for irreducible B);
    otherwise the iterate must stop moving in 1-norm.
    """
    n = b.shape[0]
    x = np.full(n, 1.0 / n)
    lam = 1.0
    for k in range(1, max_iters + 1):
        y = b @ x
        lam = float(y.sum())        # x >= 0 with unit 1-norm
        if bracket:
            ratios = y / x
            lo, hi = float(ratios.min()), float(ratios.max())
            done = hi - lo <= tol * hi
        x_new = y / lam
        if not bracket:
            done = float(np.abs(x_new - x).sum()) <= tol
        x = x_new
        if done:
            return lam, x, True, k
    return lam, x, False, max_iters


def _component_radius(a: np.ndarray, tol: float, max_iters: int) -> tuple[float, bool, int]:
    """Perron root as the largest root over strongly connected diagonal blocks."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    count, labels = connected_components(csr_matrix(a > 0), directed=True, connection="strong")
    rho, ok = 0.0, True
    for c in range(count):
        idx = np.flatnonzero(labels == c)
        block = a[np.ix_(idx, idx)]
        if len(idx) == 1:
            rho = max(rho, float(block[0, 0]))
            continue
        block, _ = _balance(block)
        shift = _shift(block)
        lam, _, conv, _ = _power_iteration(block + shift * np.eye(len(idx)), tol, max_iters, bracket=True)
        rho, ok = max(rho, lam - shift), ok and conv
    return rho, ok, count


def spectral_radius(a, tol: float = 1e-12, max_iters: int = 100_000) -> SpectralResult:
    """Perron root and left/right Perron vectors (unit 1-norm) of a non-negative matrix.

    A is first balanced by a diagonal similarity.  Power iteration then runs
    on the balanced matrix plus sI (s its largest row sum) and on the
    transpose; the shift keeps the iterates positive and removes periodicity.  For reducible A the root is
    taken over the strongly connected blocks, and if the full-matrix vectors
    do not settle (e.g. nilpotent A) ``converged`` is False and a warning is
    issued.
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0):
        raise ValueError("spectral_radius expects a non-negative matrix")
    n = a.shape[0]
    rho, ok, count = _component_radius(a, tol, max_iters)
    irreducible = count == 1
    bal, scale = _balance(a)
    shift = _shift(bal)
    b = bal + shift * np.eye(n)
    lam_r, right, ok_r, it_r = _power_iteration(b, tol, max_iters, bracket=irreducible)
    lam_l, left, ok_l, it_l = _power_iteration(b.T, tol, max_iters, bracket=irreducible)
    right = right * scale
    left = left / scale
    right, left = right / right.sum(), left / left.sum()
    if irreducible and ok_r and ok_l:
        rho = max(min(lam_r, lam_l) - shift, 0.0)
    converged = ok and ok_r and ok_l
    if not converged:
        warnings.warn("power iteration did not converge; Perron vectors are approximate",
                      RuntimeWarning, stacklevel=2)
    return SpectralResult(max(rho, 0.0), left, right, converged, max(it_r, it_l))


@dataclass
class VertexClassification:
    sigma: tuple[int, ...]
    rho: float
    verdict: str


def classify_vertex(m, sigma=None) -> VertexClassification:
    """Decide from the Perron root whether the vertex P_sigma minimises F_B.

    rho < 1 means P_sigma is the unique minimum, rho > 1 that it is not a
    minimum; within 1e-9 of 1 the first-order test is inconclusive.
    """
    if sigma is None:
        sigma = best_permutation(m)
    sigma = tuple(int(s) for s in sigma)
    rho = spectral_radius(vertex_transition_matrix(m, sigma)).rho
    if rho < 1 - RHO_BAND:
        verdict = "unique_minimum"
    elif rho > 1 + RHO_BAND:
        verdict = "not_minimum"
    else:
        verdict = "inconclusive"
    return VertexClassification(sigma, rho, verdict)


def regular_bethe_bound(n: int, d: int) -> LogValue:
    """((d-1)^(d-1) / d^(d-2))^n with 0^0 = 1."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive integers")
    per_row = (d - 1) * math.log(d - 1) if d > 1 else 0.0
    per_row -= (d - 2) * math.log(d)
    return LogValue(n * per_row)


def regular_degree(m, tol: float = 1e-9) -> int | None:
    """Common line sum d if the matrix is integer with all row/column sums equal, else None."""
    a = as_array(m)
    if np.any(np.abs(a - np.round(a)) > tol):
        return None
    sums = np.concatenate([a.sum(axis=0), a.sum(axis=1)])
    if np.max(sums) - np.min(sums) > tol:
        return None
    d = int(round(sums[0]))
    return d if d >= 1 else None


def _lin(log_v: float | None) -> float | None:
    if log_v is None:
        return None
    if log_v == -math.inf:
        return 0.0
    return math.exp(log_v) if abs(log_v) < 700 else None


@dataclass
class BoundsReport:
    n: int
    log_perm: float | None
    perm: float | None
    log_perm_bethe: float
    perm_bethe: float | None
    log_perm_frac: float
    perm_frac: float | None
    log_ratio: float | None
    ratio: float | None
    gurvits_ok: bool | None
    conjecture_ok: bool | None
    regular_degree: int | None
    log_regular_bound: float | None
    regular_bound: float | None
    chain_ok: bool | None
    spa_converged: bool
    spa_method: str

    def to_dict(self) -> dict:
        return asdict(self)


def bounds_report(m, spa_opts: SpaOptions | None = None, threads: int = 1) -> BoundsReport:
    """Exact, Bethe and fractional (special kappa) permanents with the bound checks.

    Exact fields are None for n > 30.  The chain perm >= perm_B >= regular
    bound is checked only for integer matrices with constant line sums.
    """
    mm = as_matrix(m)
    n = mm.n
    spa = run_spa(mm, spa_opts)
    log_b = spa.log_perm_bethe.log
    log_frac = frac_bethe_permanent(mm, special_kappa(n)).log
    log_p = perm_ryser(mm, threads=threads).log if n <= RYSER_MAX_N else None

    log_ratio = ratio = gurvits = conj = None
    if log_p is not None:
        log_ratio = log_p - log_b
        ratio = _lin(log_ratio)
        gurvits = log_ratio >= math.log1p(-1e-9)
        conj = log_ratio <= n * 0.5 * math.log(2.0) + math.log1p(1e-9)

    d = regular_degree(mm)
    log_reg = chain = None
    if d is not None:
        log_reg = regular_bethe_bound(n, d).log
        if log_p is not None:
            chain = bool(log_p >= log_b + math.log1p(-1e-9) and log_b >= log_reg + math.log1p(-1e-6))
    return BoundsReport(
        n=n,
        log_perm=log_p,
        perm=_lin(log_p),
        log_perm_bethe=log_b,
        perm_bethe=_lin(log_b),
        log_perm_frac=log_frac,
        perm_frac=_lin(log_frac),
        log_ratio=log_ratio,
        ratio=ratio,
        gurvits_ok=gurvits,
        conjecture_ok=conj,
        regular_degree=d,
        log_regular_bound=log_reg,
        regular_bound=_lin(log_reg),
        chain_ok=chain,
        spa_converged=spa.converged,
        spa_method=spa.method,
    )
