import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privacy_frontier.errors import DomainMismatch, InstanceTooLarge, ParameterOutOfRange
from privacy_frontier.histogram import DataDomain, Histogram, QueryWorkload
from privacy_frontier.mechanisms import laplace_mechanism
from privacy_frontier.noise import NoiseSource
from privacy_frontier.reconstruction import (
    compositions,
    contingency_2x2_workload,
    enumerate_consistent,
    num_compositions,
    reconstruct_from_noisy,
    zero_cell_pruning_count,
)


def brute_force_consistent(rows, answers, n):
    """Every count vector in {0..n}^d, kept when it has n records and reproduces the answers."""
    rows = np.asarray(rows, dtype=float)
    found = []
    for x in itertools.product(range(n + 1), repeat=rows.shape[1]):
        if sum(x) != n:
            continue
        if all(abs(sum(r * c for r, c in zip(row, x)) - a) < 1e-9 for row, a in zip(rows, answers)):
            found.append(x)
    return sorted(found)


def as_tuples(result):
    return [tuple(int(v) for v in h.counts) for h in result.consistent]


class TestEnumeration:
    @pytest.mark.parametrize("counts", [(0, 0, 0), (2, 1, 0), (1, 1, 1, 1)])
    def test_identity_is_unique(self, counts):
        q = QueryWorkload.identity(len(counts))
        res = enumerate_consistent(q, counts, sum(counts), q.domain)
        assert res.unique
        assert as_tuples(res) == [counts]

    def test_total_query(self):
        q = QueryWorkload([[1, 1]])
        res = enumerate_consistent(q, [2], 2, q.domain)
        assert as_tuples(res) == [(0, 2), (1, 1), (2, 0)]
        assert not res.unique

    def test_contingency_table(self):
        q = contingency_2x2_workload()
        x = np.array([1, 0, 1, 1])
        answers = q.apply(x)
        res = enumerate_consistent(q, answers, 3, q.domain)
        assert as_tuples(res) == brute_force_consistent(q.rows, answers, 3)
        assert (1, 0, 1, 1) in as_tuples(res)
        assert num_compositions(3, 4) == 20

    def test_infeasible_answers_give_empty_result(self):
        q = QueryWorkload([[1, 1]])
        res = enumerate_consistent(q, [5], 2, q.domain)
        assert res.consistent == () and not res.unique

    def test_result_json(self):
        q = QueryWorkload([[1, 1]])
        data = json.loads(enumerate_consistent(q, [1], 1, q.domain).to_json())
        assert data["consistent_histograms"] == [[0, 1], [1, 0]]
        assert data["count"] == 2 and data["unique"] is False

    def test_errors(self):
        with pytest.raises(InstanceTooLarge):
            enumerate_consistent(QueryWorkload.identity(9), [0] * 9, 0, DataDomain(9))
        q = QueryWorkload.identity(2)
        with pytest.raises(InstanceTooLarge):
            enumerate_consistent(q, [13, 0], 13, q.domain)
        with pytest.raises(DomainMismatch):
            enumerate_consistent(q, [1, 0], 1, DataDomain(3))
        with pytest.raises(ParameterOutOfRange):
            enumerate_consistent(q, [1], 1, q.domain)

    def test_compositions(self):
        for n, parts in [(0, 1), (3, 2), (4, 3), (2, 5)]:
            got = list(compositions(n, parts))
            assert len(got) == num_compositions(n, parts) == math.comb(n + parts - 1, parts - 1)
            assert got == sorted(got)
            assert all(sum(c) == n for c in got)


class TestPruning:
    def test_no_zero_answers(self):
        q = QueryWorkload([[1, 1, 0, 0], [0, 0, 1, 1]])
        assert zero_cell_pruning_count(q, [1, 2], 3, q.domain) == (20, 20)

    def test_zero_counting_query(self):
        q = QueryWorkload([[1, 1, 0, 0]])
        assert zero_cell_pruning_count(q, [0], 3, q.domain) == (20, 4)

    def test_zero_identity(self):
        q = QueryWorkload.identity(4)
        assert zero_cell_pruning_count(q, [0, 0, 0, 0], 0, q.domain) == (1, 1)
        res = enumerate_consistent(q, [0, 0, 0, 0], 0, q.domain)
        assert res.unique and as_tuples(res) == [(0, 0, 0, 0)]

    def test_signed_rows_do_not_prune(self):
        q = QueryWorkload([[1, -1, 0]])
        before, after = zero_cell_pruning_count(q, [0], 2, q.domain)
        assert before == after
        assert as_tuples(enumerate_consistent(q, [0], 2, q.domain)) == brute_force_consistent(q.rows, [0], 2)


integer_workloads = st.integers(1, 5).flatmap(
    lambda d: st.lists(st.lists(st.integers(-1, 1), min_size=d, max_size=d), min_size=1, max_size=4)
)


@settings(max_examples=100, deadline=None)
@given(rows=integer_workloads, data=st.data())
def test_matches_brute_force(rows, data):
    d = len(rows[0])
    n = data.draw(st.integers(0, 6))
    x = data.draw(st.sampled_from(list(compositions(n, d))))
    q = QueryWorkload(rows)
    answers = q.apply(np.array(x))
    assert as_tuples(enumerate_consistent(q, answers, n, q.domain)) == brute_force_consistent(rows, answers, n)


@settings(max_examples=60, deadline=None)
@given(rows=integer_workloads, data=st.data())
def test_adding_rows_never_enlarges(rows, data):
    d = len(rows[0])
    n = data.draw(st.integers(0, 5))
    x = np.array(data.draw(st.sampled_from(list(compositions(n, d)))))
    extra = data.draw(st.lists(st.integers(-1, 1), min_size=d, max_size=d))
    q = QueryWorkload(rows)
    bigger = q.with_rows([extra])
    small = set(as_tuples(enumerate_consistent(q, q.apply(x), n, q.domain)))
    large = set(as_tuples(enumerate_consistent(bigger, bigger.apply(x), n, bigger.domain)))
    assert large <= small
    assert tuple(x) in large


def test_noise_defeats_exact_reconstruction():
    q = contingency_2x2_workload()
    truth = Histogram([1, 0, 1, 1], q.domain)
    src = NoiseSource(31)
    hits = 0
    for trial in range(1000):
        noisy = laplace_mechanism(truth, q, 1.0, src.substream(trial)).answers
        res = reconstruct_from_noisy(q, noisy, 3, q.domain)
        hits += truth in res.consistent
    assert hits < 500
