from __future__ import annotations

import io
import itertools
import json

import numpy as np
import pytest

import fixtures as fx
from mstsynth.domain import Dataset, Domain, dataset_to_csv, load_dataset, load_domain, marginal
from mstsynth.errors import (
    CliqueTooLarge,
    DuplicateAttribute,
    EmptyDomain,
    HeaderMismatch,
    ParseError,
    UnknownAttribute,
    UnknownValue,
)

SMALL = {"SEX": ["M", "F"], "LABFORCE": ["---", "N", "Y"]}


def test_domain_from_labels():
    d = load_domain(SMALL)
    assert d.names == ("SEX", "LABFORCE")
    assert d.sizes == (2, 3)
    assert d.total_size() == 6


def test_domain_integer_size():
    d = load_domain({"EDUC": 13})
    assert d.labels[0] == tuple(str(v) for v in range(13))


def test_domain_empty_attribute():
    with pytest.raises(EmptyDomain):
        load_domain({"A": []})


def test_domain_json_text_keeps_order_and_rejects_duplicates():
    d = load_domain('{"B": 2, "A": ["x", "y", "z"]}')
    assert d.names == ("B", "A")
    with pytest.raises(DuplicateAttribute):
        load_domain('{"A": 2, "A": 3}')
    with pytest.raises(ParseError):
        load_domain("{not json")
    with pytest.raises(ParseError):
        load_domain({"A": True})


def test_domain_file_roundtrip(tmp_path):
    path = tmp_path / "domain.json"
    path.write_text(json.dumps(SMALL))
    d = load_domain(path)
    assert load_domain(d.to_dict()) == d
    assert d.digest() == load_domain(SMALL).digest()


def test_domain_total_size_is_exact():
    d = Domain.from_sizes({f"a{i}": 1000 for i in range(10)})
    assert d.total_size() == 10**30


def test_clique_normalization():
    d = load_domain(SMALL)
    assert d.clique(["LABFORCE", "SEX"]) == (0, 1)
    assert d.clique([1, "LABFORCE"]) == (1,)
    with pytest.raises(UnknownAttribute):
        d.clique(["AGE"])


def test_load_dataset_basic():
    d = load_domain(SMALL)
    data = load_dataset("SEX,LABFORCE\nM,N\nF,---\n", d)
    assert data.m == 2
    assert data.rows.tolist() == [[0, 1], [1, 0]]


def test_load_dataset_header_any_order_and_delimiter():
    d = load_domain(SMALL)
    data = load_dataset(io.StringIO("LABFORCE|SEX\nY|F\n"), d, delimiter="|")
    assert data.rows.tolist() == [[1, 2]]


def test_load_dataset_unknown_value_reports_location():
    d = load_domain(SMALL)
    with pytest.raises(UnknownValue) as info:
        load_dataset("SEX,LABFORCE\nM,N\nX,Y\n", d)
    assert info.value.row == 3
    assert info.value.column == "SEX"


def test_load_dataset_empty_body():
    d = load_domain(SMALL)
    data = load_dataset("SEX,LABFORCE\n", d)
    assert data.m == 0
    assert marginal(data, (0, 1)).values.tolist() == [0] * 6


def test_load_dataset_header_errors():
    d = load_domain(SMALL)
    with pytest.raises(HeaderMismatch):
        load_dataset("SEX\nM\n", d)
    with pytest.raises(UnknownAttribute):
        load_dataset("SEX,LABFORCE,AGE\nM,N,1\n", d)
    with pytest.raises(HeaderMismatch):
        load_dataset("", d)


def test_csv_roundtrip():
    data = fx.example_dataset()
    again = load_dataset(dataset_to_csv(data), data.domain)
    assert np.array_equal(again.rows, data.rows)


def test_example_marginal():
    data = fx.example_dataset()
    assert data.m == 1000
    assert marginal(data, (0, 1)).values.tolist() == fx.TRUE_SEX_LABFORCE
    assert marginal(data, (1, 2)).values.tolist() == fx.TRUE_LABFORCE_SCHOOL


def test_marginal_matches_nested_loop():
    rng = np.random.default_rng(3)
    data = fx.random_dataset(rng, [2, 3, 4], 50)
    for clique in [(0,), (1, 2), (0, 2), (0, 1, 2)]:
        shape = data.domain.shape(clique)
        expected = []
        for cell in itertools.product(*(range(n) for n in shape)):
            expected.append(sum(all(row[a] == v for a, v in zip(clique, cell)) for row in data.rows))
        assert marginal(data, clique).values.tolist() == expected


def test_marginal_rejects_bad_cliques():
    data = fx.example_dataset()
    with pytest.raises(ParseError):
        marginal(data, (1, 0))
    with pytest.raises(CliqueTooLarge):
        marginal(data, (0, 1, 2), cell_cap=11)


def test_dataset_rejects_out_of_range_codes():
    d = load_domain(SMALL)
    with pytest.raises(Exception):
        Dataset(d, np.array([[0, 3]]))
