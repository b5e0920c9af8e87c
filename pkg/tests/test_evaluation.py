from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy import stats

import fixtures as fx
from mstsynth.domain import Dataset, Domain, marginal
from mstsynth.errors import DomainMismatch, ParseError, TooFewAttributes
from mstsynth.evaluation import (
    ConjunctionQuery,
    Workload,
    conjunction_count,
    default_workload,
    evaluate,
    random_3way_workload,
    random_conjunction_workload,
)


def test_conjunction_full_subsets_is_m():
    data = fx.example_dataset()
    q = ConjunctionQuery((0, 1, 2), ((0, 1), (0, 1, 2), (0, 1)))
    assert conjunction_count(data, q) == data.m


def test_conjunction_singletons_is_one_cell():
    data = fx.example_dataset()
    q = ConjunctionQuery((0, 1), ((1,), (2,)))
    assert conjunction_count(data, q) == fx.TRUE_SEX_LABFORCE[5]


def test_conjunction_matches_record_scan():
    rng = np.random.default_rng(0)
    data = fx.random_dataset(rng, [2, 3, 4, 3], 120)
    for q in random_conjunction_workload(data.domain, 50, rng, attr_prob=0.5):
        hits = sum(all(row[a] in s for a, s in zip(q.clique, q.subsets)) for row in data.rows)
        assert conjunction_count(data, q) == hits


def test_query_validation_and_roundtrip():
    d = fx.example_domain()
    with pytest.raises(ParseError):
        ConjunctionQuery((0,), ((),))
    q = ConjunctionQuery((0, 2), ((1,), (0, 1)))
    assert ConjunctionQuery.from_dict(q.to_dict(d), d) == q
    w = Workload([(0, 1, 2)], [q], [(0, 1)])
    again = Workload.from_json(w.to_json(d), d)
    assert again == w


def test_3way_workload_basic():
    d = Domain.from_sizes({"a": 2, "b": 2, "c": 2})
    assert random_3way_workload(d, 1, np.random.default_rng(0)) == [(0, 1, 2)]
    with pytest.raises(TooFewAttributes):
        random_3way_workload(d, 2, np.random.default_rng(0))
    with pytest.raises(TooFewAttributes):
        random_3way_workload(Domain.from_sizes({"a": 2, "b": 2}), 1, np.random.default_rng(0))


def test_3way_workload_distinct_and_uniform():
    d = Domain.from_sizes({f"a{i}": 2 for i in range(10)})
    triples = list(itertools.combinations(range(10), 3))
    freq = dict.fromkeys(triples, 0)
    for seed in range(200):
        w = random_3way_workload(d, 50, np.random.default_rng(seed))
        assert len(set(w)) == 50
        for t in w:
            freq[t] += 1
    assert stats.chisquare(list(freq.values())).pvalue > 1e-3


def test_conjunction_attr_prob_one():
    d = Domain.from_sizes({f"a{i}": 2 for i in range(5)})
    for q in random_conjunction_workload(d, 20, np.random.default_rng(0), attr_prob=1.0):
        assert q.clique == (0, 1, 2, 3, 4)


def test_identical_data_scores_zero():
    data = fx.example_dataset()
    w = default_workload(data.domain, np.random.default_rng(0), designated=[(0, 1)])
    report = evaluate(data, data, w)
    assert all(e == 0 for v in report.errors.values() for e in v)


def test_single_flip_costs_two_over_m():
    data = fx.example_dataset()
    rows = data.rows.copy()
    rows[0, 1] = (rows[0, 1] + 1) % 3
    other = Dataset(data.domain, rows)
    w = Workload([(0, 1, 2)], [], [(0, 1), (1, 2)])
    report = evaluate(data, other, w)
    assert report.errors["3way"] == [pytest.approx(2 / data.m)]
    assert report.errors["designated"] == [pytest.approx(2 / data.m)] * 2
    # an unaffected marginal scores zero
    assert evaluate(data, other, Workload([], [], [(0, 2)])).errors["designated"] == [0.0]


def test_matches_direct_normalized_l1():
    rng = np.random.default_rng(3)
    a = fx.random_dataset(rng, [2, 3, 2, 2], 70)
    b = Dataset(a.domain, fx.random_dataset(rng, [2, 3, 2, 2], 40).rows)
    w = default_workload(a.domain, rng, designated=[(1, 3)])
    report = evaluate(a, b, w)
    for c, e in zip(w.triples, report.errors["3way"]):
        assert e == pytest.approx(np.abs(marginal(a, c).values / 70 - marginal(b, c).values / 40).sum())
    for q, e in zip(w.conjunctions, report.errors["conjunction"]):
        assert e == pytest.approx(abs(conjunction_count(a, q) / 70 - conjunction_count(b, q) / 40))
    assert report.means["3way"] == pytest.approx(np.mean(report.errors["3way"]))


def test_domain_mismatch():
    data = fx.example_dataset()
    other = Dataset(Domain.from_sizes({"x": 2}), np.zeros((1, 1), dtype=np.int64))
    with pytest.raises(DomainMismatch):
        evaluate(data, other, Workload())


def test_empty_category_means_are_nan():
    data = fx.example_dataset()
    report = evaluate(data, data, Workload())
    assert all(math.isnan(v) for v in report.means.values())
    assert report.to_dict()["counts"] == {"3way": 0, "conjunction": 0, "designated": 0}
