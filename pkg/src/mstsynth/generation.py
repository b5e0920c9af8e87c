"""Turning a fitted model into integer-valued synthetic records."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from .domain import DEFAULT_CELL_CAP, Dataset
from .errors import CliqueTooLarge, InsufficientBudget, NegativeMass, TreewidthTooLarge
from .inference import GraphicalModel, sum_to

# tolerance for round-off in expected counts that should be exact integers
_EPS = 1e-9


def synth_column(mu: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """A shuffled column of ``n`` value indices whose counts track ``mu`` to within one.

    Each value ``t`` first gets ``floor(mu_t)`` copies. The remaining slots are
    filled by drawing values without replacement with probability
    proportional to the fractional parts ``mu_t - floor(mu_t)``.
    """
    mu = np.asarray(mu, dtype=float)
    if (mu < -_EPS).any() or not np.isfinite(mu).all():
        raise NegativeMass("expected counts must be finite and nonnegative")
    mu = np.clip(mu, 0.0, None)
    # snap values within round-off of an integer so exact inputs stay exact
    near = np.round(mu)
    mu = np.where(np.abs(mu - near) < _EPS * np.maximum(1.0, near), near, mu)
    base = np.floor(mu).astype(np.int64)
    if base.sum() > n:
        raise InsufficientBudget(f"floors of the expected counts need {base.sum()} rows, only {n} available")
    counts = base.copy()
    need = n - int(base.sum())
    rem = mu - base
    while need > 0:
        avail = np.flatnonzero(rem > 0)
        if avail.size == 0:
            rem = np.ones(mu.size)
            avail = np.arange(mu.size)
        take = min(need, avail.size)
        picks = _weighted_without_replacement(rem[avail], take, rng)
        counts[avail[picks]] += 1
        rem[avail[picks]] = 0.0
        need -= take
    col = np.repeat(np.arange(mu.size), counts)
    rng.shuffle(col)
    return col


def _weighted_without_replacement(p: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Sequential weighted draws, removing each chosen item before the next draw."""
    p = np.array(p, dtype=float)
    out = np.empty(k, dtype=np.int64)
    for s in range(k):
        cdf = np.cumsum(p)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        idx = min(idx, p.size - 1)
        while p[idx] <= 0:
            idx -= 1
        out[s] = idx
        p[idx] = 0.0
    return out


def attribute_order(model: GraphicalModel) -> list[tuple[int, int]]:
    """(attribute, junction-tree clique) pairs in processing order.

    Cliques are visited in pre-order from the root, so the attributes already
    processed inside a clique always include its separator with the parent.
    Within a clique, attributes shared by more tree cliques go first: they are
    filled from the fewest groups, which keeps their own marginals tightest.
    """
    tree = model.tree
    shared = {a: sum(a in c for c in tree.cliques) for c in tree.cliques for a in c}
    seen: set[int] = set()
    out = []
    for k in tree.order:
        for a in sorted(tree.cliques[k], key=lambda a: (-shared[a], a)):
            if a not in seen:
                seen.add(a)
                out.append((a, k))
    return out


def _fill(
    model: GraphicalModel,
    n: int,
    rng: np.random.Generator,
    column: Callable[[np.ndarray, int, np.random.Generator], np.ndarray],
    cell_cap: int,
) -> Dataset:
    domain = model.domain
    rows = np.zeros((n, len(domain)), dtype=np.int64)
    processed: list[int] = []
    beliefs = model.beliefs()
    for attr, k in attribute_order(model):
        clique = model.tree.cliques[k]
        cond = tuple(a for a in clique if a in processed)
        scope = tuple(sorted(cond + (attr,)))
        if domain.cells(scope) > cell_cap:
            raise TreewidthTooLarge(f"conditional over {domain.clique_names(scope)} exceeds the cell cap")
        joint = sum_to(beliefs[k], clique, scope)
        # move attr to the last axis, conditioning attributes first
        axis = scope.index(attr)
        joint = np.moveaxis(joint, axis, -1).reshape(-1, domain.sizes[attr])
        if cond:
            keys = np.ravel_multi_index(tuple(rows[:, a] for a in cond), domain.shape(cond))
        else:
            keys = np.zeros(n, dtype=np.int64)
        order = np.argsort(keys, kind="stable")
        uniq, starts = np.unique(keys[order], return_index=True)
        bounds = np.append(starts, n)
        for g, key in enumerate(uniq):
            idx = order[bounds[g]:bounds[g + 1]]
            size = idx.size
            p = joint[key]
            total = p.sum()
            if total > 0:
                mu = size * p / total
            else:
                mu = np.full(p.size, size / p.size)
            rows[idx, attr] = column(mu, size, rng)
        processed.append(attr)
    return Dataset(domain, rows)


def synth_data(
    model: GraphicalModel,
    n: int | None = None,
    rng: np.random.Generator | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Dataset:
    """Synthetic records matching the model marginals up to per-cell rounding.

    ``n`` defaults to the model's rounded total.
    """
    if n is None:
        n = int(round(model.total))
    if n < 0:
        raise InsufficientBudget(f"cannot generate {n} records")
    rng = rng if rng is not None else np.random.default_rng()
    try:
        return _fill(model, n, rng, synth_column, cell_cap)
    except CliqueTooLarge as exc:
        raise TreewidthTooLarge(str(exc)) from None


def _iid_column(mu: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    p = np.asarray(mu, dtype=float)
    return rng.choice(p.size, size=n, p=p / p.sum())


def sample_iid(
    model: GraphicalModel,
    n: int | None = None,
    rng: np.random.Generator | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Dataset:
    """Independent draws from the model distribution; a baseline for :func:`synth_data`."""
    if n is None:
        n = int(round(model.total))
    rng = rng if rng is not None else np.random.default_rng()
    return _fill(model, n, rng, _iid_column, cell_cap)
