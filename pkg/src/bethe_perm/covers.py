"""Finite graph covers: permutation liftings and the degree-M Bethe permanent."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ShapeError, SizeError, SupportError
from .exact import RYSER_MAX_N, perm_ryser
from .matrix_io import LogValue, NonNegMatrix, as_array, as_matrix, validate_support
from .spa import SpaOptions, run_spa

MAX_ENUMERATION = 10**6
TWO_BY_TWO_MAX_M = 7
IDENTITY_MAX_NM = 20
VIOLATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LiftSpec:
    """n x n grid of permutations of range(M); ``perms[i, j, a]`` is the image of a.

    The block (i, j) of the lifted matrix is theta_ij times the permutation
    matrix with ones at (a, perms[i, j, a]).
    """

    n: int
    M: int
    perms: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.perms, dtype=np.int64)
        if p.shape != (self.n, self.n, self.M):
            raise ShapeError(f"perms must have shape ({self.n}, {self.n}, {self.M}), got {p.shape}")
        ref = np.arange(self.M)
        if not np.all(np.sort(p, axis=2) == ref):
            raise ValueError("every block must be a permutation of range(M)")
        p.setflags(write=False)
        object.__setattr__(self, "perms", p)

    @classmethod
    def identity(cls, n: int, M: int) -> "LiftSpec":
        return cls(n, M, np.broadcast_to(np.arange(M), (n, n, M)).copy())

    @classmethod
    def random(cls, n: int, M: int, rng: np.random.Generator) -> "LiftSpec":
        perms = np.empty((n, n, M), dtype=np.int64)
        for i in range(n):
            for j in range(n):
                perms[i, j] = rng.permutation(M)
        return cls(n, M, perms)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "M": self.M, "perms": (self.perms + 1).tolist()})

    @classmethod
    def from_json(cls, text: str) -> "LiftSpec":
        doc = json.loads(text)
        return cls(int(doc["n"]), int(doc["M"]), np.asarray(doc["perms"], dtype=np.int64) - 1)


def lift_matrix(m, spec: LiftSpec) -> NonNegMatrix:
    """The (nM) x (nM) matrix whose (i, j) block is theta_ij times P^(i,j)."""
    theta = as_array(m)
    n, M = spec.n, spec.M
    if theta.shape != (n, n):
        raise ShapeError(f"lift spec is for n = {n}, matrix is {theta.shape}")
    out = np.zeros((n * M, n * M))
    rows = np.arange(M)
    for i in range(n):
        for j in range(n):
            out[i * M + rows, j * M + spec.perms[i, j]] = theta[i, j]
    return NonNegMatrix(out)


def count_lifts(n: int, M: int) -> int | LogValue:
    """Number of M-covers, (M!)^(n^2); exact below 2^128, else as a LogValue."""
    if n < 1 or M < 1:
        raise ValueError("n and M must be positive")
    log_count = n * n * math.lgamma(M + 1)
    if log_count < 128 * math.log(2) + 1:
        count = math.factorial(M) ** (n * n)
        if count.bit_length() <= 128:
            return count
    return LogValue(log_count)


def _reduced_2x2_lifts(M: int):
    """For n = 2 only block (2, 2) needs to vary; the others can be the identity."""
    ident = np.arange(M)
    for p in itertools.permutations(range(M)):
        perms = np.empty((2, 2, M), dtype=np.int64)
        perms[:] = ident
        perms[1, 1] = p
        yield LiftSpec(2, M, perms)


def _all_lifts(n: int, M: int):
    blocks = list(itertools.permutations(range(M)))
    for combo in itertools.product(blocks, repeat=n * n):
        yield LiftSpec(n, M, np.array(combo, dtype=np.int64).reshape(n, n, M))


def _enumeration(n: int, M: int):
    if n == 2:
        if M > TWO_BY_TWO_MAX_M:
            raise SizeError(f"2x2 enumeration is capped at M = {TWO_BY_TWO_MAX_M}")
        return _reduced_2x2_lifts(M)
    if n * M > RYSER_MAX_N or math.factorial(M) ** (n * n) > MAX_ENUMERATION:
        raise SizeError(f"(M!)^(n^2) = {math.factorial(M)}^{n * n} lifts is beyond the enumeration cap")
    return _all_lifts(n, M)


def _lift_log_perm(theta: np.ndarray, spec: LiftSpec, threads: int = 1) -> float:
    return perm_ryser(lift_matrix(theta, spec), threads=threads).log


def degree_M_bethe_exact(m, M: int, threads: int = 1) -> LogValue:
    """M-th root of the average lifted permanent, by full enumeration.

    For n = 2 the average runs over the M! choices of one block; otherwise
    over all (M!)^(n^2) lifts (capped at 10^6 and nM <= 30).
    """
    theta = as_array(m)
    n = theta.shape[0]
    if M < 1:
        raise ValueError("M must be positive")
    logs = np.array([_lift_log_perm(theta, s, threads) for s in _enumeration(n, M)])
    if np.all(np.isneginf(logs)):
        return LogValue.zero()
    return LogValue((logsumexp(logs) - math.log(len(logs))) / M)


def twobytwo_degree_M_closed(m, M: int) -> LogValue:
    """Closed form for n = 2: (perm_B,M)^M = sum_l (t11 t22)^(M-l) (t12 t21)^l."""
    theta = as_array(m)
    if theta.shape != (2, 2):
        raise ShapeError("closed form needs a 2 x 2 matrix")
    if M < 1:
        raise ValueError("M must be positive")
    d, o = theta[0, 0] * theta[1, 1], theta[0, 1] * theta[1, 0]
    if d == 0 and o == 0:
        return LogValue.zero()
    if d == 0 or o == 0:
        return LogValue(math.log(max(d, o)))
    a, b = math.log(d), math.log(o)
    terms = [(M - ell) * a + ell * b for ell in range(M + 1)]
    return LogValue(float(logsumexp(terms)) / M)


@dataclass
class SampledEstimate:
    estimate: LogValue
    stderr_log: float
    samples: int


def degree_M_bethe_sampled(m, M: int, samples: int, seed: int = 0, threads: int = 1) -> SampledEstimate:
    """Monte-Carlo degree-M Bethe permanent over uniformly drawn lifts.

    Block permutations come from a Philox (counter-based) generator so a
    seed reproduces the estimate exactly.  ``stderr_log`` is the delta-method
    standard error of the log of the estimate.
    """
    theta = as_array(m)
    n = theta.shape[0]
    if n * M > RYSER_MAX_N:
        raise SizeError(f"n*M = {n * M} exceeds the Ryser cap {RYSER_MAX_N}")
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.Generator(np.random.Philox(seed))
    logs = np.array([_lift_log_perm(theta, LiftSpec.random(n, M, rng), threads) for _ in range(samples)])
    if np.all(np.isneginf(logs)):
        return SampledEstimate(LogValue.zero(), 0.0, samples)
    top = logs.max()
    w = np.exp(logs - top)
    mean = w.mean()
    se_rel = w.std(ddof=1) / math.sqrt(samples) / mean
    log_est = (top + math.log(mean)) / M
    return SampledEstimate(LogValue(log_est), float(se_rel / M), samples)


@dataclass
class LiftConjectureCheck:
    max_ratio: float
    violations: int
    strong_checked: bool
    mean_ratio: float
    lifts_checked: int


def check_lift_conjectures(m, M: int, mode: str = "enumerate", samples: int = 1000,
                           seed: int = 0, threads: int = 1) -> LiftConjectureCheck:
    """Compare perm(lift) with perm(theta)^M for every enumerated (or sampled) lift.

    A ratio above 1 + 1e-9 counts as a violation of the per-lift bound.
    ``mean_ratio`` <= 1 is the averaged (degree-M) form.
    """
    theta = as_array(m)
    n = theta.shape[0]
    report = validate_support(theta)
    if not report.has_perfect_matching:
        raise SupportError("perm(theta) = 0; ratios are undefined")
    log_base = M * perm_ryser(theta, threads=threads).log
    if mode == "enumerate":
        specs = _enumeration(n, M)
    elif mode == "sample":
        if n * M > RYSER_MAX_N:
            raise SizeError(f"n*M = {n * M} exceeds the Ryser cap {RYSER_MAX_N}")
        rng = np.random.Generator(np.random.Philox(seed))
        specs = (LiftSpec.random(n, M, rng) for _ in range(samples))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    log_ratios = np.array([_lift_log_perm(theta, s, threads) - log_base for s in specs])
    ratios = np.exp(log_ratios)
    return LiftConjectureCheck(
        max_ratio=float(ratios.max()),
        violations=int(np.sum(ratios > 1 + VIOLATION_TOL)),
        strong_checked=mode == "enumerate",
        mean_ratio=float(ratios.mean()),
        lifts_checked=len(ratios),
    )


@dataclass
class LiftIdentityCheck:
    lhs: LogValue
    rhs: LogValue
    rel_err: float


def check_lift_bethe_identity(m, spec: LiftSpec, spa_opts: SpaOptions | None = None) -> LiftIdentityCheck:
    """perm_B of the lifted matrix against perm_B(theta)^M, both by the SPA.

    ``rel_err`` is |lhs/rhs - 1| computed from the logs.
    """
    mm = as_matrix(m)
    if spec.n * spec.M > IDENTITY_MAX_NM:
        raise SizeError(f"n*M = {spec.n * spec.M} exceeds {IDENTITY_MAX_NM}")
    lifted = lift_matrix(mm, spec)
    if not validate_support(lifted).has_perfect_matching:
        raise SupportError("lifted matrix has no perfect matching")
    lhs = run_spa(lifted, spa_opts).log_perm_bethe
    rhs = run_spa(mm, spa_opts).log_perm_bethe ** spec.M
    return LiftIdentityCheck(lhs, rhs, abs(math.expm1(lhs.log - rhs.log)))
