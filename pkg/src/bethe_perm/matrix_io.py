"""Matrix types, validation and text (de)serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NegativeEntryError, ParseError, ShapeError

DS_TOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NonNegMatrix:
    """Square matrix with non-negative real entries.

    Zero entries are absent edges of the underlying bipartite graph.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ShapeError(f"expected a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ParseError("matrix entries must be finite")
        if np.any(arr < 0):
            i, j = np.argwhere(arr < 0)[0]
            raise NegativeEntryError(f"negative entry {arr[i, j]!r} at ({i}, {j})")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def support(self) -> np.ndarray:
        return self.entries > 0

    def __eq__(self, other):
        if not isinstance(other, NonNegMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


@dataclass(frozen=True, eq=False)
class DoublyStochastic:
    """A point of the Birkhoff polytope (rows and columns sum to one)."""

    entries: np.ndarray
    tol: float = DS_TOL

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {arr.shape}")
        if np.any(arr < -self.tol) or np.any(arr > 1 + self.tol):
            raise ValueError("doubly stochastic entries must lie in [0, 1]")
        rdev = np.max(np.abs(arr.sum(axis=1) - 1.0))
        cdev = np.max(np.abs(arr.sum(axis=0) - 1.0))
        if rdev > self.tol or cdev > self.tol:
            raise ValueError(f"row/column sums deviate from 1 by {max(rdev, cdev):.3e}")
        object.__setattr__(self, "entries", _frozen(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class LogValue:
    """Non-negative number stored as its natural log; ``is_zero`` marks exact zero."""

    log_mag: float
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, True)

    @classmethod
    def from_value(cls, x: float) -> "LogValue":
        if x < 0:
            raise ValueError("LogValue holds non-negative numbers only")
        if x == 0:
            return cls.zero()
        return cls(math.log(x))

    @property
    def log(self) -> float:
        return -math.inf if self.is_zero else self.log_mag

    @property
    def value(self) -> float:
        """Linear value; ``inf`` when it overflows a double."""
        if self.is_zero:
            return 0.0
        try:
            return math.exp(self.log_mag)
        except OverflowError:
            return math.inf

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.is_zero or other.is_zero:
            return LogValue.zero()
        return LogValue(self.log_mag + other.log_mag)

    def __pow__(self, p: float) -> "LogValue":
        if self.is_zero:
            return LogValue.zero() if p > 0 else LogValue(0.0)
        return LogValue(self.log_mag * p)

    def root(self, m: int) -> "LogValue":
        return self ** (1.0 / m)


@dataclass(frozen=True)
class SupportReport:
    has_perfect_matching: bool
    zero_rows: list[int] = field(default_factory=list)
    zero_cols: list[int] = field(default_factory=list)
    support_edge_count: int = 0
    matching: list[int] | None = None


# --------------------------------------------------------------------------
# parsing and serialization

def _from_rows(rows) -> NonNegMatrix:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError("matrix must be a non-empty list of rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ShapeError("rows have different lengths")
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"non-numeric matrix entry: {exc}") from None
    return NonNegMatrix(arr)


def parse_matrix(text: str, format: str = "json") -> NonNegMatrix:
    """Parse a matrix from JSON (bare rows or ``{"n", "entries"}``) or header-less CSV."""
    if format == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
        if isinstance(doc, dict):
            if "entries" not in doc:
                raise ParseError('JSON object needs an "entries" key')
            m = _from_rows(doc["entries"])
            if "n" in doc and doc["n"] != m.n:
                raise ShapeError(f'"n" is {doc["n"]} but entries are {m.n}x{m.n}')
            return m
        return _from_rows(doc)
    if format == "csv":
        rows = []
        for rec in csv.reader(io.StringIO(text.strip())):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError as exc:
                raise ParseError(f"bad CSV entry: {exc}") from None
        return _from_rows(rows)
    raise ParseError(f"unknown format {format!r}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize_matrix(m: NonNegMatrix, format: str = "json") -> str:
    rows = m.entries.tolist()
    if format == "json":
        body = ",".join("[" + ",".join(_fmt(x) for x in r) + "]" for r in rows)
        return f'{{"n":{m.n},"entries":[{body}]}}'
    if format == "csv":
        return "\n".join(",".join(_fmt(x) for x in r) for r in rows) + "\n"
    raise ParseError(f"unknown format {format!r}")


def guess_format(path: str) -> str:
    return "csv" if path.lower().endswith(".csv") else "json"


def load_matrix(path: str, format: str | None = None) -> NonNegMatrix:
    """Read a matrix from ``path`` ("-" is stdin); format is guessed from the suffix."""
    import sys

    if path == "-":
        text = sys.stdin.read()
        if format is None:
            format = "json" if text.lstrip().startswith(("[", "{")) else "csv"
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_matrix(text, format or guess_format(path))


def as_array(m) -> np.ndarray:
    if isinstance(m, (NonNegMatrix, DoublyStochastic)):
        return m.entries
    return np.asarray(m, dtype=np.float64)


def as_matrix(m) -> NonNegMatrix:
    return m if isinstance(m, NonNegMatrix) else NonNegMatrix(m)


# --------------------------------------------------------------------------
# support analysis

def max_bipartite_matching(mask: np.ndarray) -> list[int]:
    """Maximum matching by augmenting paths; returns ``match[i]`` = column or -1."""
    n_rows, n_cols = mask.shape
    adj = [np.flatnonzero(mask[i]).tolist() for i in range(n_rows)]
    col_owner = [-1] * n_cols

    def augment(i, seen):
        for j in adj[i]:
            if seen[j]:
                continue
            seen[j] = True
            if col_owner[j] == -1 or augment(col_owner[j], seen):
                col_owner[j] = i
                return True
        return False

    for i in range(n_rows):
        augment(i, [False] * n_cols)
    match = [-1] * n_rows
    for j, i in enumerate(col_owner):
        if i >= 0:
            match[i] = j
    return match


def validate_support(m) -> SupportReport:
    """Decide whether the positive entries of ``m`` contain a perfect matching."""
    support = as_array(m) > 0
    match = max_bipartite_matching(support)
    ok = all(j >= 0 for j in match)
    return SupportReport(
        has_perfect_matching=ok,
        zero_rows=np.flatnonzero(~support.any(axis=1)).tolist(),
        zero_cols=np.flatnonzero(~support.any(axis=0)).tolist(),
        support_edge_count=int(support.sum()),
        matching=match if ok else None,
    )


def matching_support(m) -> np.ndarray:
    """Mask of the edges that lie on at least one perfect matching.

    Edge (i, sigma(i')) is on some perfect matching iff rows i and i' share a
    strongly connected component of the alternating digraph built from one
    perfect matching sigma.
    """
    support = as_array(m) > 0
    n = support.shape[0]
    match = max_bipartite_matching(support)
    if any(j < 0 for j in match):
        return np.zeros_like(support)
    sigma = np.array(match)
    # row i -> row i' whenever (i, sigma(i')) is an edge
    digraph = support[:, sigma]
    _, labels = connected_components(csr_matrix(digraph), directed=True, connection="strong")
    same = labels[:, None] == labels[None, :]
    allowed = np.zeros_like(support)
    allowed[:, sigma] = digraph & same
    return allowed


def support_components(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Connected components of the bipartite support graph (row labels, column labels, count)."""
    n = mask.shape[0]
    adj = np.zeros((2 * n, 2 * n), dtype=bool)
    adj[:n, n:] = mask
    adj[n:, :n] = mask.T
    count, labels = connected_components(csr_matrix(adj), directed=False)
    return labels[:n], labels[n:], count


def is_permutation(sigma: Sequence[int], n: int) -> bool:
    return sorted(sigma) == list(range(n))


def permutation_matrix(sigma: Sequence[int]) -> np.ndarray:
    n = len(sigma)
    p = np.zeros((n, n))
    p[np.arange(n), np.asarray(sigma)] = 1.0
    return p
