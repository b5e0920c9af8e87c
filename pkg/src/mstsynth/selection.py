"""Choosing which marginals to measure.

Two strategies: a public Chow-Liu style tree on provisional data with extra
triangles (:func:`select_public`), and a private Kruskal variant that spends
budget through the exponential mechanism (:func:`select_private`).
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .accountant import PrivacyParams, RdpLedger
from .domain import DEFAULT_CELL_CAP, Clique, Dataset, Domain, marginal
from .errors import EmptyDataset, InvalidParams, MissingOneWay, NonPositiveParameter, SameAttribute
from .graphs import UnionFind, maximum_spanning_tree
from .inference import estimate, model_marginal
from .mechanisms import MeasurementLog, exponential_mechanism

__all__ = [
    "SelectionResult",
    "mutual_information",
    "maximum_spanning_tree",
    "augment_triangles",
    "triple_weight",
    "select_public",
    "pairwise_scores",
    "private_step_epsilon",
    "select_private",
]

BOOST = 100.0
TRIANGLE_THRESHOLD = 0.1


@dataclass(frozen=True)
class SelectionResult:
    cliques: list[Clique]
    weights: list[float]

    def __post_init__(self):
        if len(set(self.cliques)) != len(self.cliques):
            raise InvalidParams("selection contains duplicate cliques")
        if any(not w > 0 for w in self.weights):
            raise NonPositiveParameter("selection weights must be positive")

    def to_list(self, domain: Domain) -> list[dict]:
        return [{"attrs": domain.clique_names(c), "weight": w} for c, w in zip(self.cliques, self.weights)]


def _pair_counts(data: Dataset, i: int, j: int) -> np.ndarray:
    a, b = sorted((i, j))
    return marginal(data, (a, b)).reshaped(data.domain)


def mutual_information(data: Dataset, i: int | str, j: int | str) -> float:
    """Mutual information, in nats, of the empirical joint of attributes ``i`` and ``j``."""
    i, j = data.domain.index(i), data.domain.index(j)
    if i == j:
        raise SameAttribute(f"mutual information needs two distinct attributes, got {i} twice")
    if data.m == 0:
        return 0.0
    p = _pair_counts(data, i, j) / data.m
    pi = p.sum(axis=1, keepdims=True)
    pj = p.sum(axis=0, keepdims=True)
    nz = p > 0
    mi = float(np.sum(p[nz] * np.log(p[nz] / (pi @ pj)[nz])))
    return max(mi, 0.0)


def _triangle_error(data: Dataset, hub: int, j: int, k: int) -> float:
    """Normalized L1 gap between the true 3-way marginal and its max-entropy fit.

    Fitting only the exact (hub, j) and (hub, k) marginals gives the
    distribution where j and k are independent given the hub, so the estimate
    is ``M_hj * M_hk / M_h`` cell by cell.
    """
    clique = tuple(sorted((hub, j, k)))
    true = marginal(data, clique).reshaped(data.domain)
    hj = _pair_counts(data, hub, j)
    hk = _pair_counts(data, hub, k)
    if hub > j:
        hj = hj.T
    if hub > k:
        hk = hk.T
    h = hj.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = np.where(h[:, None, None] > 0,
                       hj[:, :, None] * hk[:, None, :] / np.where(h > 0, h, 1.0)[:, None, None], 0.0)
    # est axes are (hub, j, k); reorder to ascending attribute order
    order = np.argsort([hub, j, k])
    est = np.transpose(est, order)
    return float(np.abs(true - est).sum() / max(data.m, 1))


def augment_triangles(
    data: Dataset,
    tree: Sequence[tuple[int, int]],
    threshold: float = TRIANGLE_THRESHOLD,
) -> list[Clique]:
    """Extra 2- and 3-way cliques for tree neighbours whose joint is poorly explained.

    For every hub attribute, its tree neighbours form a complete graph whose
    edge ``(j, k)`` weighs the normalized error of predicting the
    ``(hub, j, k)`` marginal from the two tree edges. Edges below ``threshold``
    are dropped and a maximum spanning forest of the rest is kept; each
    retained edge contributes ``(j, k)`` and ``(hub, j, k)``.
    """
    nbrs: dict[int, set[int]] = {}
    for a, b in tree:
        nbrs.setdefault(a, set()).add(b)
        nbrs.setdefault(b, set()).add(a)
    out: list[Clique] = []
    for hub in sorted(nbrs):
        around = sorted(nbrs[hub])
        weights = {}
        for j, k in itertools.combinations(around, 2):
            e = _triangle_error(data, hub, j, k)
            if e >= threshold:
                weights[(j, k)] = e
        for j, k in maximum_spanning_tree(around, weights, require_spanning=False):
            for c in (tuple(sorted((j, k))), tuple(sorted((hub, j, k)))):
                if c not in out:
                    out.append(c)
    return out


def triple_weight(epsilon: float) -> float:
    if epsilon <= 0.3:
        return 8.0
    if epsilon >= 4.0:
        return 4.0
    return 6.0


def _special_sets(special: Sequence[Clique]) -> tuple[list[Clique], list[Clique]]:
    """Split special cliques into pairs and triples; a triangle of pairs implies its triple."""
    pairs = [tuple(sorted(c)) for c in special if len(c) == 2]
    triples = [tuple(sorted(c)) for c in special if len(c) == 3]
    pair_set = set(pairs)
    attrs = sorted({a for p in pairs for a in p})
    for t in itertools.combinations(attrs, 3):
        if all(p in pair_set for p in itertools.combinations(t, 2)) and t not in triples:
            triples.append(t)
    for c in special:
        if len(c) not in (2, 3):
            raise InvalidParams(f"special cliques must have 2 or 3 attributes, got {c}")
    return list(dict.fromkeys(pairs)), list(dict.fromkeys(triples))


def clique_weights(cliques: Sequence[Clique], special: Sequence[Clique], epsilon: float) -> list[float]:
    pairs, triples = _special_sets(special)
    out = []
    for c in cliques:
        if c in triples:
            out.append(triple_weight(epsilon))
        elif c in pairs:
            out.append(2.0)
        else:
            out.append(1.0)
    return out


def select_public(
    provisional: Dataset,
    params: PrivacyParams,
    special: Sequence[Clique] = (),
    threshold: float = TRIANGLE_THRESHOLD,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> SelectionResult:
    """Tree-plus-triangles selection computed on public provisional data."""
    if provisional.m == 0:
        raise EmptyDataset("provisional dataset has no records")
    domain = provisional.domain
    d = len(domain)
    pairs, triples = _special_sets(special)
    boosted = set(pairs)
    weights = {}
    for i, j in itertools.combinations(range(d), 2):
        weights[(i, j)] = mutual_information(provisional, i, j) + (BOOST if (i, j) in boosted else 0.0)
    tree = maximum_spanning_tree(range(d), weights)

    cliques: list[Clique] = [tuple(e) for e in tree]
    for c in pairs + triples:
        if c not in cliques:
            cliques.append(c)
    for c in augment_triangles(provisional, tree, threshold):
        if c not in cliques:
            cliques.append(c)
    cliques = [c for c in cliques if domain.cells(c) < cell_cap]
    return SelectionResult(cliques, clique_weights(cliques, special, params.epsilon))


def pairwise_scores(data: Dataset, oneway_log: MeasurementLog, iters: int = 500) -> dict[tuple[int, int], float]:
    """``q_ij = ||M_ij(D) - Mbar_ij||_1`` where ``Mbar`` comes from a model fit to 1-way measurements."""
    domain = data.domain
    covered = {m.clique[0] for m in oneway_log if len(m.clique) == 1}
    missing = [domain.names[i] for i in range(len(domain)) if i not in covered]
    if missing:
        raise MissingOneWay(f"no 1-way measurement for {missing}")
    model = estimate(oneway_log, domain, iters=iters)
    scores = {}
    for i, j in itertools.combinations(range(len(domain)), 2):
        est = model_marginal(model, (i, j)).values
        scores[(i, j)] = float(np.abs(marginal(data, (i, j)).values - est).sum())
    return scores


def private_step_epsilon(rho: float, rounds: int) -> float:
    """Per-round exponential-mechanism parameter ``sqrt(8 rho / rounds)``.

    This is the parameter of the mechanism written as ``exp(eps q / 2)`` for a
    sensitivity-1 score; each round then costs ``rho / rounds``.
    """
    return math.sqrt(8.0 * rho / rounds)


def select_private(
    data: Dataset,
    oneway_log: MeasurementLog,
    rho: float,
    initial: Sequence[tuple[int, int]] = (),
    rng: np.random.Generator | None = None,
    ledger: RdpLedger | None = None,
    scores: dict[tuple[int, int], float] | None = None,
) -> list[tuple[int, int]]:
    """Differentially private Kruskal: grow ``initial`` into a spanning structure.

    Each round draws one cross-component pair with the exponential mechanism
    on the scores of :func:`pairwise_scores`. The rounds share ``rho`` equally.
    When ``initial`` already connects every attribute nothing is drawn and no
    budget is spent.
    """
    if not rho > 0:
        raise NonPositiveParameter(f"rho must be positive, got {rho}")
    rng = rng if rng is not None else np.random.default_rng()
    d = len(data.domain)
    uf = UnionFind(range(d))
    chosen = [tuple(sorted(p)) for p in initial]
    for a, b in chosen:
        uf.union(a, b)
    r = uf.components()
    if r == 1:
        return list(dict.fromkeys(chosen))
    if scores is None:
        scores = pairwise_scores(data, oneway_log)
    eps_step = private_step_epsilon(rho, r - 1) / 2.0
    for _ in range(r - 1):
        candidates = [e for e in itertools.combinations(range(d), 2) if not uf.connected(*e)]
        q = [scores[e] for e in candidates]
        pick = candidates[exponential_mechanism(q, eps_step, 1.0, rng, ledger, "select")]
        chosen.append(pick)
        uf.union(*pick)
    return list(dict.fromkeys(chosen))
