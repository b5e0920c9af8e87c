"""Graphical-model estimation from noisy marginal measurements.

The estimated distribution is ``P(x) ∝ exp(sum_C theta_C(x_C))`` with one
potential table per measured clique. Inference runs exact sum-product belief
propagation on a junction tree obtained by min-fill triangulation, and
:func:`estimate` fits the potentials by entropic mirror descent on the squared
measurement loss.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .domain import DEFAULT_CELL_CAP, Clique, Domain, MarginalVector
from .errors import CliqueTooLarge, EmptyLog, TreewidthTooLarge
from .graphs import maximum_spanning_tree
from .mechanisms import IDENTITY, Measurement, MeasurementLog

DEFAULT_ITERS = 2500
DEFAULT_STEP = 2.0
ARMIJO = 0.5
GROWTH = 1.25
MIN_STEP = 1e-12


# -- dense factor helpers; every factor's axes follow its sorted attribute tuple --

def expand(values: np.ndarray, attrs: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """View ``values`` (axes ``attrs``) as broadcastable against axes ``target``."""
    pos = {a: k for k, a in enumerate(attrs)}
    shape = [values.shape[pos[a]] if a in pos else 1 for a in target]
    return values.reshape(shape)


def sum_to(values: np.ndarray, attrs: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    keep = set(keep)
    axes = tuple(k for k, a in enumerate(attrs) if a not in keep)
    return values.sum(axis=axes) if axes else values


def logsumexp_to(values: np.ndarray, attrs: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    keep = set(keep)
    axes = tuple(k for k, a in enumerate(attrs) if a not in keep)
    if not axes:
        return values
    peak = values.max(axis=axes, keepdims=True)
    out = np.log(np.exp(values - peak).sum(axis=axes, keepdims=True)) + peak
    return out.reshape([s for k, s in enumerate(values.shape) if k not in axes])


def _merge(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(set(a) | set(b)))


# -- junction tree --

@dataclass(frozen=True)
class JunctionTree:
    """Maximal cliques of a triangulation joined into a tree.

    ``parent[k]`` is the parent of clique ``k`` in the tree rooted at clique 0
    (``-1`` for the root) and ``order`` lists the cliques in pre-order.
    """

    cliques: tuple[Clique, ...]
    edges: tuple[tuple[int, int], ...]
    separators: tuple[Clique, ...]
    elimination_order: tuple[int, ...]
    parent: tuple[int, ...] = field(default=())
    order: tuple[int, ...] = field(default=())

    def neighbors(self, k: int) -> list[int]:
        out = []
        for (a, b) in self.edges:
            if a == k:
                out.append(b)
            elif b == k:
                out.append(a)
        return out

    def children(self, k: int) -> list[int]:
        return [c for c in self.order if self.parent[c] == k]

    def separator(self, child: int) -> Clique:
        """Attributes shared by ``child`` and its parent."""
        p = self.parent[child]
        return tuple(sorted(set(self.cliques[child]) & set(self.cliques[p])))

    def containing(self, attrs: Sequence[int]) -> int | None:
        """Index of the smallest clique containing ``attrs``, if any."""
        need = set(attrs)
        best = None
        for k, c in enumerate(self.cliques):
            if need <= set(c) and (best is None or len(c) < len(self.cliques[best])):
                best = k
        return best

    def max_clique_size(self) -> int:
        return max(len(c) for c in self.cliques)


def _min_fill_order(domain: Domain, adjacency: dict[int, set[int]]) -> tuple[list[int], list[Clique]]:
    adj = {v: set(n) for v, n in adjacency.items()}
    remaining = set(adj)
    order, cliques = [], []
    sizes = domain.sizes
    while remaining:
        best, best_key = None, None
        for v in sorted(remaining):
            nbrs = adj[v]
            fill = sum(1 for a, b in itertools.combinations(sorted(nbrs), 2) if b not in adj[a])
            weight = math.prod(sizes[u] for u in nbrs) * sizes[v]
            key = (fill, weight, v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        nbrs = adj[best]
        for a, b in itertools.combinations(nbrs, 2):
            adj[a].add(b)
            adj[b].add(a)
        cliques.append(tuple(sorted(nbrs | {best})))
        for u in nbrs:
            adj[u].discard(best)
        del adj[best]
        remaining.discard(best)
        order.append(best)
    return order, cliques


def build_junction_tree(
    domain: Domain,
    cliques: Sequence[Clique],
    cell_cap: int = DEFAULT_CELL_CAP,
) -> JunctionTree:
    """Triangulate the clique graph with min-fill elimination and join the maximal cliques.

    Attributes that appear in no clique become singleton cliques so the tree
    always covers the whole domain.

    Raises:
        TreewidthTooLarge: some triangulated clique has ``cell_cap`` cells or more.
    """
    if len(cliques) == 0:
        raise EmptyLog("at least one clique is required")
    adjacency: dict[int, set[int]] = {v: set() for v in range(len(domain))}
    for c in cliques:
        for a, b in itertools.combinations(c, 2):
            adjacency[a].add(b)
            adjacency[b].add(a)
    order, elim = _min_fill_order(domain, adjacency)

    maximal: list[Clique] = []
    for c in sorted(set(elim), key=lambda c: (-len(c), c)):
        if not any(set(c) <= set(m) for m in maximal):
            maximal.append(c)
    maximal.sort()
    for c in maximal:
        n_c = domain.cells(c)
        if n_c >= cell_cap:
            names = domain.clique_names(c)
            raise TreewidthTooLarge(
                f"triangulated clique {names} has {n_c} cells (cap {cell_cap}); the selected "
                "marginals are not tree-like enough"
            )

    weights = {
        (i, j): len(set(maximal[i]) & set(maximal[j]))
        for i, j in itertools.combinations(range(len(maximal)), 2)
    }
    edges = tuple(maximum_spanning_tree(range(len(maximal)), weights))
    seps = tuple(tuple(sorted(set(maximal[a]) & set(maximal[b]))) for a, b in edges)

    parent = [-1] * len(maximal)
    pre = []
    nbrs: dict[int, list[int]] = {k: [] for k in range(len(maximal))}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    stack, seen = [0], {0}
    while stack:
        k = stack.pop()
        pre.append(k)
        for c in sorted(nbrs[k], reverse=True):
            if c not in seen:
                seen.add(c)
                parent[c] = k
                stack.append(c)
    return JunctionTree(tuple(maximal), edges, seps, tuple(order), tuple(parent), tuple(pre))


def running_intersection_holds(tree: JunctionTree) -> bool:
    attrs = {a for c in tree.cliques for a in c}
    for a in attrs:
        holding = {k for k, c in enumerate(tree.cliques) if a in c}
        start = next(iter(holding))
        seen, stack = {start}, [start]
        while stack:
            k = stack.pop()
            for n in tree.neighbors(k):
                if n in holding and n not in seen:
                    seen.add(n)
                    stack.append(n)
        if seen != holding:
            return False
    return True


# -- the model --

@dataclass(eq=False)
class GraphicalModel:
    domain: Domain
    tree: JunctionTree
    cliques: list[Clique]
    theta: dict[Clique, np.ndarray]
    total: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self._assign = {c: self.tree.containing(c) for c in self.cliques}
        if any(k is None for k in self._assign.values()):
            raise TreewidthTooLarge("junction tree does not cover every model clique")
        self._beliefs: dict[int, np.ndarray] | None = None

    @classmethod
    def zeros(cls, domain: Domain, cliques: Sequence[Clique], total: float = 1.0,
              cell_cap: int = DEFAULT_CELL_CAP) -> "GraphicalModel":
        cliques = list(dict.fromkeys(tuple(c) for c in cliques))
        tree = build_junction_tree(domain, cliques, cell_cap)
        theta = {c: np.zeros(domain.shape(c)) for c in cliques}
        return cls(domain, tree, cliques, theta, total)

    def with_theta(self, theta: dict[Clique, np.ndarray]) -> "GraphicalModel":
        return GraphicalModel(self.domain, self.tree, self.cliques, theta, self.total, dict(self.diagnostics))

    def log_potentials(self) -> list[np.ndarray]:
        pots = [np.zeros(self.domain.shape(c)) for c in self.tree.cliques]
        for c, k in self._assign.items():
            pots[k] = pots[k] + expand(self.theta[c], c, self.tree.cliques[k])
        return pots

    def beliefs(self) -> dict[int, np.ndarray]:
        if self._beliefs is None:
            self._beliefs = _calibrate(self.tree, self.log_potentials())
        return self._beliefs

    def clique_marginal(self, clique: Clique) -> np.ndarray:
        """Probability table of a model clique (or any subset of a tree clique)."""
        k = self._assign.get(clique)
        if k is None:
            k = self.tree.containing(clique)
        return sum_to(self.beliefs()[k], self.tree.cliques[k], clique)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "domain_digest": self.domain.digest(),
            "cliques": [self.domain.clique_names(c) for c in self.cliques],
            "theta": [self.theta[c].ravel().tolist() for c in self.cliques],
            "total": self.total,
            "solver": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, payload: dict, cell_cap: int = DEFAULT_CELL_CAP) -> "GraphicalModel":
        from .domain import load_domain

        domain = load_domain(payload["domain"])
        cliques = [domain.clique(c) for c in payload["cliques"]]
        tree = build_junction_tree(domain, cliques, cell_cap)
        theta = {c: np.asarray(t, dtype=float).reshape(domain.shape(c))
                 for c, t in zip(cliques, payload["theta"])}
        return cls(domain, tree, cliques, theta, float(payload["total"]), dict(payload.get("solver", {})))


def _calibrate(tree: JunctionTree, pots: list[np.ndarray]) -> dict[int, np.ndarray]:
    """Two-pass sum-product in log space; returns normalized clique beliefs."""
    cl = tree.cliques
    up: dict[int, np.ndarray] = {}
    down: dict[int, np.ndarray] = {}
    children = {k: [] for k in range(len(cl))}
    for k in tree.order[1:]:
        children[tree.parent[k]].append(k)

    def incoming(k: int, skip: int | None = None) -> np.ndarray:
        acc = pots[k]
        for c in children[k]:
            if c != skip:
                acc = acc + expand(up[c], tree.separator(c), cl[k])
        if tree.parent[k] >= 0 and skip != tree.parent[k]:
            acc = acc + expand(down[k], tree.separator(k), cl[k])
        return acc

    for k in reversed(tree.order[1:]):
        acc = pots[k]
        for c in children[k]:
            acc = acc + expand(up[c], tree.separator(c), cl[k])
        up[k] = logsumexp_to(acc, cl[k], tree.separator(k))
    for k in tree.order:
        for c in children[k]:
            acc = incoming(k, skip=c)
            down[c] = logsumexp_to(acc, cl[k], tree.separator(c))

    beliefs = {}
    for k in range(len(cl)):
        b = incoming(k)
        b = np.exp(b - b.max())
        beliefs[k] = b / b.sum()
    return beliefs


def belief_propagation(model: GraphicalModel) -> dict[Clique, np.ndarray]:
    """Exact probability marginals of every junction-tree clique, keyed by clique."""
    beliefs = model.beliefs()
    return {model.tree.cliques[k]: b for k, b in beliefs.items()}


def _steiner_subtree(tree: JunctionTree, attrs: Sequence[int]) -> set[int]:
    need = set(attrs)
    keep = set(range(len(tree.cliques)))
    terminals = set()
    covered = set()
    # greedily pick cliques covering the query, largest overlap first
    while covered != need:
        k = max(range(len(tree.cliques)), key=lambda i: (len(set(tree.cliques[i]) & (need - covered)), -i))
        terminals.add(k)
        covered |= set(tree.cliques[k]) & need
    changed = True
    while changed:
        changed = False
        for k in sorted(keep):
            deg = sum(1 for n in tree.neighbors(k) if n in keep)
            if k not in terminals and deg <= 1 and len(keep) > 1:
                keep.discard(k)
                changed = True
    return keep


def _eliminate(factors: list[tuple[tuple[int, ...], np.ndarray]], query: Clique, domain: Domain,
               cell_cap: int) -> np.ndarray:
    factors = list(factors)
    hidden = {a for attrs, _ in factors for a in attrs} - set(query)
    while hidden:
        def cost(v):
            scope = set()
            for attrs, _ in factors:
                if v in attrs:
                    scope |= set(attrs)
            return (domain.cells(sorted(scope)), v)

        v = min(hidden, key=cost)
        involved = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        scope = tuple(sorted({a for attrs, _ in involved for a in attrs}))
        if domain.cells(scope) > cell_cap:
            raise CliqueTooLarge(f"eliminating attribute {v} needs {domain.cells(scope)} cells")
        prod = np.ones([1] * len(scope))
        for attrs, vals in involved:
            prod = prod * expand(vals, attrs, scope)
        prod = np.broadcast_to(prod, domain.shape(scope))
        rest = tuple(a for a in scope if a != v)
        factors.append((rest, sum_to(prod, scope, rest)))
        hidden.discard(v)
    out = np.ones(domain.shape(query))
    for attrs, vals in factors:
        out = out * expand(vals, attrs, query)
    return out


def model_marginal(model: GraphicalModel, clique: Sequence[int],
                   cell_cap: int = DEFAULT_CELL_CAP) -> MarginalVector:
    """Expected counts ``total * P(x_C)`` for any clique, measured or not."""
    clique = tuple(sorted(set(int(c) for c in clique)))
    domain = model.domain
    if domain.cells(clique) > cell_cap:
        raise CliqueTooLarge(f"clique {domain.clique_names(clique)} exceeds the cell cap")
    k = model.tree.containing(clique)
    if k is not None:
        prob = sum_to(model.beliefs()[k], model.tree.cliques[k], clique)
        return MarginalVector(clique, model.total * np.asarray(prob, dtype=float).ravel())

    tree = model.tree
    beliefs = model.beliefs()
    sub = _steiner_subtree(tree, clique)
    root = min(sub)
    factors = [(tree.cliques[root], beliefs[root])]
    for k in sub:
        if k == root:
            continue
        # parent within the subtree: walk towards the subtree root
        p = _subtree_parent(tree, sub, root, k)
        sep = tuple(sorted(set(tree.cliques[k]) & set(tree.cliques[p])))
        b = beliefs[k]
        denom = expand(sum_to(b, tree.cliques[k], sep), sep, tree.cliques[k])
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0, b / np.where(denom > 0, denom, 1.0), 0.0)
        factors.append((tree.cliques[k], cond))
    prob = _eliminate(factors, clique, domain, cell_cap)
    return MarginalVector(clique, model.total * prob.ravel())


def _subtree_parent(tree: JunctionTree, sub: set[int], root: int, k: int) -> int:
    prev = {root: None}
    stack = [root]
    while stack:
        u = stack.pop()
        for n in tree.neighbors(u):
            if n in sub and n not in prev:
                prev[n] = u
                stack.append(n)
    return prev[k]


# -- estimation --

def estimate_total(log: MeasurementLog) -> float:
    """Precision-weighted mean of the per-measurement record-count estimates.

    Identity measurements are used when present; otherwise aggregate
    measurements (whose rows jointly cover every source cell) stand in.
    """
    est, var = [], []
    for m in log:
        t = m.total_estimate()
        if t is not None:
            est.append(t[0])
            var.append(t[1])
    if not est:
        for m in log:
            n_src = sum(len(g) for g in m.groups)
            est.append(float(m.values.sum() / m.weight))
            var.append(m.sigma**2 * n_src / m.weight**2)
    est, var = np.array(est), np.array(var)
    precision = 1.0 / var
    return max(0.0, float(np.sum(est * precision) / np.sum(precision)))


def _by_clique(log: MeasurementLog) -> dict[Clique, list[Measurement]]:
    out: dict[Clique, list[Measurement]] = {}
    for m in log:
        out.setdefault(tuple(m.clique), []).append(m)
    return out


def objective(model: GraphicalModel, log: MeasurementLog) -> float:
    """Squared measurement loss of the model's count marginals."""
    total = 0.0
    for c, ms in _by_clique(log).items():
        mu = model.total * model.clique_marginal(c).ravel()
        total += sum(m.loss(mu) for m in ms)
    return total


def _loss_and_grad(model: GraphicalModel, groups: dict[Clique, list[Measurement]]):
    loss, grad, mus = 0.0, {}, {}
    for c, ms in groups.items():
        mu = model.total * model.clique_marginal(c).ravel()
        g = np.zeros(mu.size)
        for m in ms:
            loss += m.loss(mu)
            g += m.gradient(mu)
        grad[c] = g.reshape(model.domain.shape(c))
        mus[c] = mu
    return loss, grad, mus


def theta_gradient(model: GraphicalModel, log: MeasurementLog) -> dict[Clique, np.ndarray]:
    """Exact gradient of :func:`objective` with respect to the potentials.

    Uses ``d mu_B(s) / d theta_C(t) = N (P(x_B = s, x_C = t) - P(x_B = s) P(x_C = t))``.
    """
    groups = _by_clique(log)
    _, g_mu, _ = _loss_and_grad(model, groups)
    out = {}
    for c in model.cliques:
        p_c = model.clique_marginal(c)
        acc = np.zeros(p_c.shape)
        for b, g in g_mu.items():
            union = _merge(b, c)
            joint = model_marginal(model, union).values.reshape(model.domain.shape(union)) / model.total
            p_b = sum_to(joint, union, b)
            weighted = joint * expand(g, b, union)
            acc += sum_to(weighted, union, c) - float(np.sum(g * p_b)) * p_c
        out[c] = model.total * acc
    return out


def estimate(
    log: MeasurementLog,
    domain: Domain,
    iters: int = DEFAULT_ITERS,
    step: float = DEFAULT_STEP,
    total: float | None = None,
    cell_cap: int = DEFAULT_CELL_CAP,
    callback: Callable[[int, float], None] | None = None,
) -> GraphicalModel:
    """Fit a graphical model to a measurement log by mirror descent.

    Each iteration moves the potentials against the loss gradient taken with
    respect to the count marginals, ``theta_C -= (step / total) * dL/dmu_C``.
    A trial step is accepted only if the loss does not increase and the
    decrease is at least half of its first-order prediction
    ``<dL/dmu, mu_old - mu_new>``; otherwise the step is halved and retried.
    After each accepted step the step size grows by 25%. The loop stops early
    once the step size underflows, which happens only at a numerical optimum.

    Args:
        log: noisy measurements; their cliques define the model structure.
        domain: the domain every measurement refers to.
        iters: number of accepted-or-rejected update attempts.
        step: initial step size, in units of records.
        total: record count to fit; estimated from the log when omitted.
        cell_cap: largest junction-tree clique allowed.
        callback: called with ``(iteration, loss)`` after each iteration.

    Returns:
        The fitted model with solver diagnostics (loss history, final step).
    """
    if len(log) == 0:
        raise EmptyLog("cannot estimate a model from an empty measurement log")
    groups = _by_clique(log)
    if total is None:
        total = estimate_total(log)
    model = GraphicalModel.zeros(domain, list(groups), total, cell_cap)
    scale = 1.0 / max(total, 1.0)

    loss, grad, mus = _loss_and_grad(model, groups)
    history = [loss]
    halvings = 0
    for it in range(iters):
        while True:
            theta = {c: model.theta[c] - step * scale * grad[c] for c in model.cliques}
            trial = model.with_theta(theta)
            trial_loss, trial_grad, trial_mus = _loss_and_grad(trial, groups)
            # sufficient decrease relative to the first-order prediction
            predicted = sum(float(grad[c].ravel() @ (mus[c] - trial_mus[c])) for c in groups)
            if trial_loss <= loss and loss - trial_loss >= ARMIJO * predicted:
                break
            step *= 0.5
            halvings += 1
            if step < MIN_STEP:
                break
        if step < MIN_STEP:
            history.append(loss)
            break
        model, loss, grad, mus = trial, trial_loss, trial_grad, trial_mus
        step *= GROWTH
        history.append(loss)
        if callback is not None:
            callback(it, loss)
    model.diagnostics = {
        "iters": iters,
        "final_step": step,
        "halvings": halvings,
        "final_loss": loss,
        "loss_history": history,
        "total": total,
    }
    return model


def identity_measurement(clique: Clique, values: np.ndarray, sigma: float, weight: float = 1.0) -> Measurement:
    return Measurement(tuple(clique), np.asarray(values, dtype=float), sigma, weight, IDENTITY)
