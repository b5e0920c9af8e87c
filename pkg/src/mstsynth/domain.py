"""Discrete domains, encoded datasets and exact marginals.

Cells of a marginal are laid out row-major over the clique's attributes in
ascending attribute order, so the last attribute varies fastest.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Any, TextIO, Union

import numpy as np

from .errors import (
    CliqueTooLarge,
    DuplicateAttribute,
    EmptyDomain,
    HeaderMismatch,
    ParseError,
    UnknownAttribute,
    UnknownValue,
)

Clique = tuple[int, ...]

DEFAULT_CELL_CAP = 10**6

PathOrText = Union[str, os.PathLike, TextIO]


@dataclass(frozen=True)
class Domain:
    """Ordered attribute schema; attribute ``i`` takes values ``labels[i]``."""

    names: tuple[str, ...]
    labels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if len(self.names) != len(self.labels):
            raise ParseError("names and labels differ in length")
        seen = set()
        for name in self.names:
            if name in seen:
                raise DuplicateAttribute(f"attribute {name!r} appears twice")
            seen.add(name)
        for name, values in zip(self.names, self.labels):
            if len(values) == 0:
                raise EmptyDomain(f"attribute {name!r} has no values")
            if len(set(values)) != len(values):
                raise ParseError(f"attribute {name!r} has repeated value labels")

    @classmethod
    def from_sizes(cls, sizes: Mapping[str, int]) -> "Domain":
        return cls(
            tuple(sizes),
            tuple(tuple(str(v) for v in range(int(n))) for n in sizes.values()),
        )

    def __len__(self) -> int:
        return len(self.names)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.labels)

    def size(self, attr: int | str) -> int:
        return len(self.labels[self.index(attr)])

    def index(self, attr: int | str) -> int:
        if isinstance(attr, (int, np.integer)):
            if not 0 <= attr < len(self.names):
                raise UnknownAttribute(f"attribute index {attr} out of range")
            return int(attr)
        try:
            return self.names.index(attr)
        except ValueError:
            raise UnknownAttribute(f"unknown attribute {attr!r}") from None

    def clique(self, attrs: Iterable[int | str]) -> Clique:
        """Normalize attribute names or indices into a sorted clique."""
        idx = sorted({self.index(a) for a in attrs})
        if not idx:
            raise ParseError("a clique needs at least one attribute")
        return tuple(idx)

    def shape(self, clique: Sequence[int]) -> tuple[int, ...]:
        return tuple(len(self.labels[i]) for i in clique)

    def cells(self, clique: Sequence[int]) -> int:
        return math.prod(self.shape(clique))

    def total_size(self) -> int:
        """Full domain size as an exact Python integer."""
        return math.prod(self.sizes)

    def clique_names(self, clique: Sequence[int]) -> list[str]:
        return [self.names[i] for i in clique]

    def to_dict(self) -> dict[str, list[str]]:
        return {n: list(v) for n, v in zip(self.names, self.labels)}

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=False, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def replace(self, attr: int, name: str | None = None, labels: Sequence[str] | None = None) -> "Domain":
        names = list(self.names)
        all_labels = list(self.labels)
        if name is not None:
            names[attr] = name
        if labels is not None:
            all_labels[attr] = tuple(labels)
        return Domain(tuple(names), tuple(all_labels))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Records encoded as value indices, one column per domain attribute."""

    domain: Domain
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.size == 0:
            rows = rows.reshape(0, len(self.domain))
        if rows.ndim != 2 or rows.shape[1] != len(self.domain):
            raise ParseError(f"rows must have shape (m, {len(self.domain)}), got {rows.shape}")
        if rows.size:
            sizes = np.asarray(self.domain.sizes)
            if (rows < 0).any() or (rows >= sizes).any():
                raise UnknownValue("row holds a value index outside its attribute's domain")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    def __len__(self) -> int:
        return self.m

    def column(self, attr: int | str) -> np.ndarray:
        return self.rows[:, self.domain.index(attr)]

    def labels_of(self, attr: int | str) -> list[str]:
        i = self.domain.index(attr)
        lab = self.domain.labels[i]
        return [lab[v] for v in self.rows[:, i]]


@dataclass(frozen=True, eq=False)
class MarginalVector:
    clique: Clique
    values: np.ndarray

    def reshaped(self, domain: Domain) -> np.ndarray:
        return self.values.reshape(domain.shape(self.clique))

    def total(self) -> float:
        return float(self.values.sum())


def _read_text(source: PathOrText) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, os.PathLike) or (isinstance(source, str) and os.path.exists(source)):
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    return str(source)


def load_domain(spec: PathOrText | Mapping[str, Any]) -> Domain:
    """Build a :class:`Domain` from a mapping of attribute name to labels or size.

    ``spec`` may be a mapping, JSON text, a path to a JSON file or an open file.
    An integer size ``k`` expands to the labels ``"0"`` .. ``"k-1"``.
    """
    if isinstance(spec, Mapping):
        pairs = list(spec.items())
    else:
        text = _read_text(spec)

        def hook(items):
            names = [k for k, _ in items]
            dup = {n for n in names if names.count(n) > 1}
            if dup:
                raise DuplicateAttribute(f"attribute(s) repeated: {sorted(dup)}")
            return items

        try:
            pairs = json.loads(text, object_pairs_hook=hook)
        except json.JSONDecodeError as exc:
            raise ParseError(f"domain spec is not valid JSON: {exc}") from None
        if not isinstance(pairs, list):
            raise ParseError("domain spec must be a JSON object")

    names, labels = [], []
    for name, values in pairs:
        if not isinstance(name, str):
            raise ParseError("attribute names must be strings")
        if isinstance(values, bool):
            raise ParseError(f"attribute {name!r}: expected a list of labels or an integer size")
        if isinstance(values, int):
            if values < 0:
                raise ParseError(f"attribute {name!r}: negative size")
            values = [str(v) for v in range(values)]
        elif isinstance(values, list):
            if any(isinstance(v, (list, dict)) or v is None for v in values):
                raise ParseError(f"attribute {name!r}: labels must be scalars")
            values = [str(v) for v in values]
        else:
            raise ParseError(f"attribute {name!r}: expected a list of labels or an integer size")
        names.append(name)
        labels.append(tuple(values))
    return Domain(tuple(names), tuple(labels))


def load_dataset(source: PathOrText, domain: Domain, delimiter: str = ",") -> Dataset:
    """Parse delimited text (header row first) into an encoded dataset.

    The header must name every domain attribute exactly once, in any order.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise HeaderMismatch("missing header row") from None
    header = [h.strip() for h in header]
    for h in header:
        if h not in domain.names:
            raise UnknownAttribute(f"header names unknown attribute {h!r}")
    if len(set(header)) != len(header) or set(header) != set(domain.names):
        missing = sorted(set(domain.names) - set(header))
        raise HeaderMismatch(f"header must list each attribute once; missing {missing}")

    positions = [domain.names.index(h) for h in header]
    lookups = [{lab: k for k, lab in enumerate(domain.labels[p])} for p in positions]
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(record)}")
        row = [0] * len(domain)
        for col, (p, lookup, cell) in enumerate(zip(positions, lookups, record)):
            try:
                row[p] = lookup[cell]
            except KeyError:
                raise UnknownValue(
                    f"line {lineno}, column {header[col]!r}: unknown value {cell!r}",
                    row=lineno,
                    column=header[col],
                ) from None
        rows.append(row)
    arr = np.array(rows, dtype=np.int64).reshape(len(rows), len(domain))
    return Dataset(domain, arr)


def dataset_to_csv(data: Dataset, delimiter: str = ",") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(data.domain.names)
    labels = data.domain.labels
    for row in data.rows:
        writer.writerow([labels[i][v] for i, v in enumerate(row)])
    return buf.getvalue()


def write_dataset(data: Dataset, path: str | os.PathLike, delimiter: str = ",") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dataset_to_csv(data, delimiter))


def cell_index(data: Dataset, clique: Sequence[int]) -> np.ndarray:
    """Flat row-major cell index of every record restricted to ``clique``."""
    shape = data.domain.shape(clique)
    if data.m == 0:
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(tuple(data.rows[:, i] for i in clique), shape)


def marginal(data: Dataset, clique: Sequence[int], cell_cap: int = DEFAULT_CELL_CAP) -> MarginalVector:
    """Exact count vector of ``data`` over ``clique``."""
    clique = tuple(int(i) for i in clique)
    if list(clique) != sorted(set(clique)) or not clique:
        raise ParseError(f"clique must be nonempty and strictly increasing: {clique}")
    for i in clique:
        data.domain.index(i)
    n_c = data.domain.cells(clique)
    if n_c > cell_cap:
        raise CliqueTooLarge(f"clique {clique} has {n_c} cells, above the cap of {cell_cap}")
    counts = np.bincount(cell_index(data, clique), minlength=n_c).astype(float)
    return MarginalVector(clique, counts)
