"""Workload error reports: random 3-way marginals, conjunctions and designated cliques.

Every error compares frequency vectors (counts divided by the record count),
so each lies in [0, 2].
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .domain import DEFAULT_CELL_CAP, Clique, Dataset, Domain, marginal
from .errors import DomainMismatch, ParseError, TooFewAttributes


@dataclass(frozen=True)
class ConjunctionQuery:
    """Records whose value on each clique attribute lies in the matching subset."""

    clique: Clique
    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.clique) != len(self.subsets):
            raise ParseError("one subset per clique attribute is required")
        if any(len(s) == 0 for s in self.subsets):
            raise ParseError("conjunction subsets must be nonempty")

    def to_dict(self, domain: Domain) -> dict:
        return {domain.names[a]: [domain.labels[a][v] for v in s] for a, s in zip(self.clique, self.subsets)}

    @classmethod
    def from_dict(cls, payload: dict, domain: Domain) -> "ConjunctionQuery":
        items = sorted(((domain.index(k), v) for k, v in payload.items()), key=lambda kv: kv[0])
        subsets = []
        for a, labels in items:
            lookup = {lab: k for k, lab in enumerate(domain.labels[a])}
            try:
                subsets.append(tuple(sorted(lookup[str(lab)] for lab in labels)))
            except KeyError as exc:
                raise ParseError(f"unknown value {exc} for {domain.names[a]!r}") from None
        return cls(tuple(a for a, _ in items), tuple(subsets))


@dataclass
class Workload:
    triples: list[Clique] = field(default_factory=list)
    conjunctions: list[ConjunctionQuery] = field(default_factory=list)
    designated: list[Clique] = field(default_factory=list)

    def to_json(self, domain: Domain) -> str:
        return json.dumps({
            "triples": [domain.clique_names(c) for c in self.triples],
            "conjunctions": [q.to_dict(domain) for q in self.conjunctions],
            "designated": [domain.clique_names(c) for c in self.designated],
        }, indent=2)

    @classmethod
    def from_json(cls, text: str, domain: Domain) -> "Workload":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"workload is not valid JSON: {exc}") from None
        return cls(
            [domain.clique(c) for c in payload.get("triples", [])],
            [ConjunctionQuery.from_dict(q, domain) for q in payload.get("conjunctions", [])],
            [domain.clique(c) for c in payload.get("designated", [])],
        )


@dataclass
class ScoreReport:
    errors: dict[str, list[float]]
    seed: int | None = None

    @property
    def means(self) -> dict[str, float]:
        return {k: (float(np.mean(v)) if v else math.nan) for k, v in self.errors.items()}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "counts": {k: len(v) for k, v in self.errors.items()},
            "means": self.means,
            "errors": self.errors,
        }


def conjunction_count(data: Dataset, q: ConjunctionQuery, cell_cap: int = DEFAULT_CELL_CAP) -> float:
    mu = marginal(data, q.clique, cell_cap).reshaped(data.domain)
    return float(mu[np.ix_(*q.subsets)].sum())


def random_3way_workload(domain: Domain, count: int, rng: np.random.Generator) -> list[Clique]:
    """``count`` distinct attribute triples, each uniform over all triples."""
    d = len(domain)
    if d < 3:
        raise TooFewAttributes(f"need at least 3 attributes, domain has {d}")
    if count > math.comb(d, 3):
        raise TooFewAttributes(f"only {math.comb(d, 3)} distinct triples exist, {count} requested")
    seen: list[Clique] = []
    have = set()
    while len(seen) < count:
        c = tuple(sorted(int(a) for a in rng.choice(d, size=3, replace=False)))
        if c not in have:
            have.add(c)
            seen.append(c)
    return seen


def random_conjunction_workload(
    domain: Domain,
    count: int,
    rng: np.random.Generator,
    attr_prob: float = 0.1,
) -> list[ConjunctionQuery]:
    """Queries over random attribute samples with uniformly random nonempty value subsets."""
    d = len(domain)
    out = []
    for _ in range(count):
        attrs = np.zeros(0, dtype=np.int64)
        while attrs.size == 0:
            attrs = np.flatnonzero(rng.random(d) < attr_prob)
        subsets = []
        for a in attrs:
            n = domain.sizes[a]
            pick = np.zeros(0, dtype=np.int64)
            while pick.size == 0:
                pick = np.flatnonzero(rng.random(n) < 0.5)
            subsets.append(tuple(int(v) for v in pick))
        out.append(ConjunctionQuery(tuple(int(a) for a in attrs), tuple(subsets)))
    return out


def default_workload(
    domain: Domain,
    rng: np.random.Generator,
    triples: int = 100,
    conjunctions: int = 100,
    designated: Sequence[Clique] = (),
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Workload:
    tri = []
    if len(domain) >= 3:
        tri = random_3way_workload(domain, min(triples, math.comb(len(domain), 3)), rng)
        tri = [c for c in tri if domain.cells(c) <= cell_cap]
    conj = [q for q in random_conjunction_workload(domain, conjunctions, rng)
            if domain.cells(q.clique) <= cell_cap]
    return Workload(tri, conj, list(designated))


def _frequencies(data: Dataset, clique: Clique, cell_cap: int) -> np.ndarray:
    mu = marginal(data, clique, cell_cap).values
    return mu / data.m if data.m else mu


def evaluate(
    truth: Dataset,
    synth: Dataset,
    workload: Workload,
    cell_cap: int = DEFAULT_CELL_CAP,
    seed: int | None = None,
) -> ScoreReport:
    """Normalized L1 errors of ``synth`` against ``truth`` on every workload query."""
    if truth.domain != synth.domain:
        raise DomainMismatch("truth and synthetic datasets use different domains")
    errors: dict[str, list[float]] = {"3way": [], "conjunction": [], "designated": []}
    for c in workload.triples:
        errors["3way"].append(float(np.abs(_frequencies(truth, c, cell_cap) - _frequencies(synth, c, cell_cap)).sum()))
    for c in workload.designated:
        errors["designated"].append(
            float(np.abs(_frequencies(truth, c, cell_cap) - _frequencies(synth, c, cell_cap)).sum()))
    for q in workload.conjunctions:
        a = conjunction_count(truth, q, cell_cap) / truth.m if truth.m else 0.0
        b = conjunction_count(synth, q, cell_cap) / synth.m if synth.m else 0.0
        errors["conjunction"].append(abs(a - b))
    return ScoreReport(errors, seed)


__all__ = [
    "ConjunctionQuery",
    "Workload",
    "ScoreReport",
    "conjunction_count",
    "random_3way_workload",
    "random_conjunction_workload",
    "default_workload",
    "evaluate",
]
