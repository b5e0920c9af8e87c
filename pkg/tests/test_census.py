from __future__ import annotations

import numpy as np
import pytest

from mstsynth import census
from mstsynth.domain import Dataset, Domain
from mstsynth.errors import MissingAttribute, NonIntegerLabel


def census_dataset(valueh: list[int], incwage: list[int]) -> Dataset:
    vh_labels = tuple(sorted({str(v) for v in valueh}, key=int))
    iw_labels = tuple(sorted({str(v) for v in incwage}, key=int))
    domain = Domain(("SEX", "VALUEH", "INCWAGE", "CITY"), (("1", "2"), vh_labels, iw_labels, ("0", "1")))
    rows = np.array([[k % 2, vh_labels.index(str(v)), iw_labels.index(str(w)), 0]
                     for k, (v, w) in enumerate(zip(valueh, incwage))], dtype=np.int64)
    return Dataset(domain, rows)


def test_valueh_buckets():
    assert census.valueh_bucket(12340) == 2468
    assert census.valueh_bucket(0) == 0
    assert census.valueh_bucket(25000) == 5000
    assert census.valueh_bucket(9999998) == 5001
    assert census.valueh_bucket(9999999) == 5002
    assert census.valueh_bucket(30000) == 5000


def test_incwage_split():
    assert (census.incwage_a(1234), census.incwage_b(1234)) == (12, 6)
    assert census.incwage_a(9999998) == 51
    assert census.incwage_a(5000) == 50 and census.incwage_a(6000) == 50
    assert census.incwage_b(2500) == 0
    assert census.incwage_b(2540) == 1
    assert census.incwage_b(2550) == 2
    assert census.incwage_b(2525) == 3
    assert census.incwage_b(2510) == 4
    assert census.incwage_b(2505) == 5
    assert census.incwage_b(2503) == 7


def test_digit_sets():
    sets = census.digit_sets()
    assert sets[0] == [0]
    assert sets[1] == [20, 40, 60, 80]
    assert sets[4] == [10, 30, 70, 90]
    assert sorted(v for s in sets for v in s) == list(range(100))


def test_digit_draws_uniform():
    rng = np.random.default_rng(0)
    assert all(census.incwage_b_to_digits(0, rng) == 0 for _ in range(20))
    draws = [census.incwage_b_to_digits(1, rng) for _ in range(4000)]
    vals, cnt = np.unique(draws, return_counts=True)
    assert vals.tolist() == [20, 40, 60, 80]
    assert (np.abs(cnt - 1000) < 4 * np.sqrt(1000 * 0.75)).all()
    with pytest.raises(NonIntegerLabel):
        census.incwage_b_to_digits(8, rng)


def test_transform_layout():
    data = census_dataset([12340, 9999999], [1234, 9999998])
    out = census.transform(data)
    assert out.domain.names == ("SEX", "VALUEH", "INCWAGE_A", "INCWAGE_B", "CITY")
    assert out.domain.sizes == (2, 5003, 52, 8, 2)
    # 9999998 is even but not a multiple of 5, so its class is 6
    assert out.rows.tolist() == [[0, 2468, 12, 6, 0], [1, 5002, 51, 6, 0]]


def test_reverse_exact_and_digit_class():
    data = census_dataset([12340, 9999998], [2500, 1234])
    for seed in range(30):
        back = census.reverse_transform(census.transform(data), np.random.default_rng(seed))
        labels = [back.domain.labels[2][v] for v in back.rows[:, 2]]
        assert labels[0] == "2500"
        w = int(labels[1])
        assert w // 100 == 12 and w % 100 in census.digit_sets()[6]
        assert [back.domain.labels[1][v] for v in back.rows[:, 1]] == ["12340", "9999998"]
        assert back.domain.names == ("SEX", "VALUEH", "INCWAGE", "CITY")


def test_reverse_missing_code():
    data = census_dataset([5], [9999998])
    back = census.reverse_transform(census.transform(data), np.random.default_rng(0))
    assert back.domain.labels[2][back.rows[0, 2]] == "9999998"


def test_transform_errors():
    d = Domain.from_sizes({"VALUEH": 2})
    with pytest.raises(MissingAttribute):
        census.transform(Dataset(d, np.zeros((1, 1), dtype=np.int64)))
    d = Domain(("VALUEH", "INCWAGE"), (("a", "b"), ("1", "2")))
    with pytest.raises(NonIntegerLabel):
        census.transform(Dataset(d, np.zeros((1, 2), dtype=np.int64)))
