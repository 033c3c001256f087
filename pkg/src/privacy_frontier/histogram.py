"""Finite data domains, histograms, and linear query workloads.

A database is represented only through its histogram ``x``: one nonnegative
integer count per element of the data domain. Linear queries are rows of a
matrix ``Q`` with entries in ``[-1, 1]``; the exact workload answer is ``Q @ x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import DomainMismatch, InvalidWorkload, ParseError


@dataclass(frozen=True)
class DataDomain:
    """The finite data domain. Identity is structural: size plus labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"domain size must be a positive integer, got {self.size!r}")
        object.__setattr__(self, "size", int(self.size))
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != self.size:
                raise ValueError("labels must have one entry per domain element")
            if len(set(labels)) != len(labels):
                raise ValueError("domain labels must be unique")
            object.__setattr__(self, "labels", labels)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Histogram:
    """Nonnegative integer counts over a :class:`DataDomain`."""

    __slots__ = ("domain", "counts")

    def __init__(self, counts: Iterable[int], domain: DataDomain | None = None):
        raw = np.asarray(list(counts) if not isinstance(counts, np.ndarray) else counts)
        if raw.ndim != 1:
            raise ValueError("histogram counts must be a vector")
        if raw.size and not np.all(np.equal(np.mod(raw, 1), 0)):
            raise ValueError("histogram counts must be integers")
        values = raw.astype(np.int64)
        if np.any(values < 0):
            raise ValueError("histogram counts must be nonnegative")
        if domain is None:
            domain = DataDomain(len(values))
        if len(values) != domain.size:
            raise DomainMismatch(
                f"{len(values)} counts supplied for a domain of size {domain.size}"
            )
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "counts", _frozen(values))

    def __setattr__(self, name, value):
        raise AttributeError("Histogram is immutable")

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash((self.domain, self.counts.tobytes()))

    def __repr__(self):
        return f"Histogram({self.counts.tolist()})"

    def __add__(self, other: Histogram) -> Histogram:
        _check_same_domain(self.domain, other.domain)
        return Histogram(self.counts + other.counts, self.domain)

    def total(self) -> int:
        return total_count(self)


class QueryWorkload:
    """A ``k x |domain|`` matrix of linear queries with entries in ``[-1, 1]``.

    Entries outside the range are rejected, never clamped. The same type is used
    for the strategy matrix of the matrix mechanism.
    """

    is_identity = False

    def __init__(self, rows, domain: DataDomain | None = None):
        matrix = np.array(rows, dtype=float, ndmin=2)
        if matrix.ndim != 2:
            raise InvalidWorkload("workload must be a two-dimensional matrix")
        if matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise InvalidWorkload("workload needs at least one query and one column")
        if not np.all(np.isfinite(matrix)):
            raise InvalidWorkload("workload entries must be finite")
        if np.any(np.abs(matrix) > 1.0):
            raise InvalidWorkload("linear query entries must lie in [-1, 1]")
        if domain is None:
            domain = DataDomain(matrix.shape[1])
        if matrix.shape[1] != domain.size:
            raise DomainMismatch(
                f"workload has {matrix.shape[1]} columns but the domain has size {domain.size}"
            )
        self._domain = domain
        self._rows = _frozen(matrix)

    @property
    def domain(self) -> DataDomain:
        return self._domain

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape

    @property
    def num_queries(self) -> int:
        return self.shape[0]

    @property
    def is_counting(self) -> bool:
        return bool(np.all((self.rows == 0) | (self.rows == 1)))

    def apply(self, counts: np.ndarray) -> np.ndarray:
        return self.rows @ np.asarray(counts, dtype=float)

    def sensitivity(self) -> float:
        return float(np.abs(self.rows).sum(axis=0).max())

    def with_rows(self, extra_rows) -> QueryWorkload:
        """A new workload with ``extra_rows`` appended below the current ones."""
        extra = np.array(extra_rows, dtype=float, ndmin=2)
        return QueryWorkload(np.vstack([self.rows, extra]), self.domain)

    def __eq__(self, other):
        if not isinstance(other, QueryWorkload):
            return NotImplemented
        if self.shape != other.shape or self.domain != other.domain:
            return False
        if self.is_identity and other.is_identity:
            return True
        return np.array_equal(self.rows, other.rows)

    def __hash__(self):
        return hash(self.fingerprint())

    def fingerprint(self) -> str:
        """Short stable digest used in reports and certificates."""
        import hashlib

        if self.is_identity:
            return f"identity-{self.domain.size}"
        digest = hashlib.sha256(np.ascontiguousarray(self.rows).tobytes())
        digest.update(repr(self.shape).encode())
        return digest.hexdigest()[:16]

    def __repr__(self):
        return f"QueryWorkload(shape={self.shape})"

    @classmethod
    def identity(cls, size: int, domain: DataDomain | None = None) -> QueryWorkload:
        return IdentityWorkload(size, domain)

    @classmethod
    def total(cls, size: int) -> QueryWorkload:
        return cls(np.ones((1, size)))


class IdentityWorkload(QueryWorkload):
    """The identity workload, one counting query per domain cell.

    The dense matrix is only built on request, so national-scale identity
    workloads (one query per school district) cost nothing until materialized.
    """

    is_identity = True

    def __init__(self, size: int, domain: DataDomain | None = None):
        if domain is None:
            domain = DataDomain(size)
        if domain.size != size:
            raise DomainMismatch("identity size must equal the domain size")
        self._domain = domain

    @cached_property
    def _rows(self) -> np.ndarray:
        return _frozen(np.eye(self._domain.size))

    @property
    def shape(self) -> tuple[int, int]:
        return (self._domain.size, self._domain.size)

    @property
    def is_counting(self) -> bool:
        return True

    def apply(self, counts: np.ndarray) -> np.ndarray:
        return np.asarray(counts, dtype=float).copy()

    def sensitivity(self) -> float:
        return 1.0

    def __repr__(self):
        return f"IdentityWorkload({self._domain.size})"


def _check_same_domain(a: DataDomain, b: DataDomain) -> None:
    if a != b:
        raise DomainMismatch(f"domains differ: {a} vs {b}")


def total_count(h: Histogram) -> int:
    """Number of records, the l1 norm of the histogram."""
    return int(np.abs(h.counts).sum())


def l1_distance(h1: Histogram, h2: Histogram) -> int:
    """Number of records that differ. Histograms are adjacent iff this is 1."""
    _check_same_domain(h1.domain, h2.domain)
    return int(np.abs(h1.counts - h2.counts).sum())


def are_adjacent(h1: Histogram, h2: Histogram) -> bool:
    return l1_distance(h1, h2) == 1


def exact_answer(q: QueryWorkload, h: Histogram) -> np.ndarray:
    """Exact workload answers ``Q @ x``."""
    _check_same_domain(q.domain, h.domain)
    return q.apply(h.counts)


def workload_sensitivity(q: QueryWorkload) -> float:
    """l1 sensitivity of the workload: the largest column l1 norm."""
    return q.sensitivity()


# -- plain-text matrix format -------------------------------------------------
#
#   domain <size>
#   <row of whitespace-separated numbers>
#   ...
#
# Blank lines and lines starting with '#' are ignored.


def read_matrix_text(stream: TextIO) -> tuple[DataDomain, np.ndarray]:
    size = None
    rows: list[list[float]] = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if size is None:
            parts = text.split()
            if len(parts) != 2 or parts[0] != "domain":
                raise ParseError("expected header 'domain <size>'", lineno)
            try:
                size = int(parts[1])
            except ValueError:
                raise ParseError(f"bad domain size {parts[1]!r}", lineno) from None
            if size < 1:
                raise ParseError("domain size must be positive", lineno)
            continue
        try:
            row = [float(tok) for tok in text.split()]
        except ValueError:
            raise ParseError(f"non-numeric entry in {text!r}", lineno) from None
        if len(row) != size:
            raise ParseError(f"expected {size} entries, found {len(row)}", lineno)
        rows.append(row)
    if size is None:
        raise ParseError("missing 'domain <size>' header")
    if not rows:
        raise ParseError("no matrix rows after the domain header")
    return DataDomain(size), np.array(rows, dtype=float)


def load_workload(stream: TextIO) -> QueryWorkload:
    domain, rows = read_matrix_text(stream)
    return QueryWorkload(rows, domain)


def load_histogram(stream: TextIO) -> Histogram:
    domain, rows = read_matrix_text(stream)
    if rows.shape[0] != 1:
        raise ParseError("a histogram literal has exactly one row of counts")
    try:
        return Histogram(rows[0], domain)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_matrix_text(rows: Sequence[Sequence[float]] | np.ndarray) -> str:
    matrix = np.array(rows, ndmin=2)
    lines = [f"domain {matrix.shape[1]}"]
    for row in matrix:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"
