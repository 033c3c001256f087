"""Exact reconstruction from published tables, at toy scale.

Given a workload ``Q``, its exactly published answers and the number of
records ``n``, list every nonnegative integer histogram consistent with them.
A unique solution means the publication is blatantly non-private. Zero-valued
counting-query answers rule out entire cells before enumeration starts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainMismatch, InstanceTooLarge, ParameterOutOfRange
from .histogram import DataDomain, Histogram, QueryWorkload

MAX_DOMAIN = 8
MAX_RECORDS = 12
MATCH_ATOL = 1e-9


@dataclass(frozen=True)
class ReconstructionResult:
    consistent: tuple[Histogram, ...]
    answers: tuple[float, ...]
    workload: str

    @property
    def unique(self) -> bool:
        return len(self.consistent) == 1

    def to_dict(self) -> dict:
        return {
            "workload": self.workload,
            "answers": list(self.answers),
            "unique": self.unique,
            "count": len(self.consistent),
            "consistent_histograms": [h.counts.tolist() for h in self.consistent],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def compositions(n: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative integer vectors of length ``parts`` summing to ``n``, lexicographically."""
    if parts == 0:
        if n == 0:
            yield ()
        return
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, parts - 1):
            yield (first, *rest)


def num_compositions(n: int, parts: int) -> int:
    """Stars and bars: ``C(n + parts - 1, parts - 1)``."""
    if parts == 0:
        return 1 if n == 0 else 0
    return math.comb(n + parts - 1, parts - 1)


def _validate(q: QueryWorkload, answers, n: int, domain: DataDomain) -> np.ndarray:
    if q.domain != domain:
        raise DomainMismatch("workload and domain differ")
    values = np.asarray(answers, dtype=float).ravel()
    if values.shape != (q.num_queries,):
        raise ParameterOutOfRange(f"need {q.num_queries} answers, got {values.size}")
    if int(n) != n or n < 0:
        raise ParameterOutOfRange("n must be a nonnegative integer")
    if domain.size > MAX_DOMAIN or n > MAX_RECORDS:
        raise InstanceTooLarge(
            f"enumeration is capped at {MAX_DOMAIN} cells and {MAX_RECORDS} records "
            f"(got {domain.size} cells, n={n})"
        )
    return values


def zero_forced_cells(q: QueryWorkload, answers) -> np.ndarray:
    """Boolean mask of cells that a zero answer to a counting query forces to zero."""
    rows = q.rows
    answers = np.asarray(answers, dtype=float).ravel()
    forced = np.zeros(q.shape[1], dtype=bool)
    for row, value in zip(rows, answers):
        if value == 0 and np.all((row == 0) | (row == 1)):
            forced |= row == 1
    return forced


def zero_cell_pruning_count(q: QueryWorkload, answers, n: int, domain: DataDomain) -> tuple[int, int]:
    """Candidate histograms before and after ruling out zero-forced cells."""
    _validate(q, answers, n, domain)
    free = int((~zero_forced_cells(q, answers)).sum())
    return num_compositions(int(n), domain.size), num_compositions(int(n), free)


def enumerate_consistent(q: QueryWorkload, answers, n: int, domain: DataDomain) -> ReconstructionResult:
    """Every histogram with ``n`` records whose exact answers equal ``answers``.

    An empty result means the answers are infeasible; only the size cap raises.
    Output order is lexicographic in the cell counts.
    """
    values = _validate(q, answers, n, domain)
    n = int(n)
    free = np.flatnonzero(~zero_forced_cells(q, values))
    rows = q.rows
    found = []
    for partial in compositions(n, len(free)):
        x = np.zeros(domain.size, dtype=np.int64)
        x[free] = partial
        if np.allclose(rows @ x, values, rtol=0.0, atol=MATCH_ATOL):
            found.append(x)
    found.sort(key=lambda v: tuple(v))
    return ReconstructionResult(
        tuple(Histogram(x, domain) for x in found),
        tuple(float(v) for v in values),
        q.fingerprint(),
    )


def contingency_2x2_workload() -> QueryWorkload:
    """Row sums, column sums and the total of a 2x2 table with cells (r0c0, r0c1, r1c0, r1c1)."""
    return QueryWorkload(
        [
            [1, 1, 0, 0],
            [0, 0, 1, 1],
            [1, 0, 1, 0],
            [0, 1, 0, 1],
            [1, 1, 1, 1],
        ],
        DataDomain(4, ("r0c0", "r0c1", "r1c0", "r1c1")),
    )


def reconstruct_from_noisy(
    q: QueryWorkload, noisy_answers: Sequence[float], n: int, domain: DataDomain
) -> ReconstructionResult:
    """Round noisy answers to integers and attempt exact reconstruction."""
    return enumerate_consistent(q, np.rint(np.asarray(noisy_answers, dtype=float)), n, domain)
