from __future__ import annotations

from collections.abc import Hashable, Iterable, Mapping

from .errors import Disconnected


class UnionFind:
    """Disjoint sets over arbitrary hashable items; the smaller root wins ties."""

    def __init__(self, items: Iterable[Hashable] = ()):
        self.parent: dict = {}
        self.rank: dict = {}
        for x in items:
            self.add(x)

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.rank[x] = 0

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb] or (self.rank[ra] == self.rank[rb] and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def connected(self, a, b) -> bool:
        return self.find(a) == self.find(b)

    def components(self) -> int:
        return len({self.find(x) for x in self.parent})


def maximum_spanning_tree(
    nodes: Iterable, weights: Mapping[tuple, float], require_spanning: bool = True
) -> list[tuple]:
    """Kruskal's algorithm on an undirected weighted graph.

    ``weights`` maps an edge ``(u, v)`` with ``u < v`` to its weight. Heavier
    edges are taken first; equal weights fall back to lexicographic edge order,
    so the output is fully deterministic. With ``require_spanning`` a
    disconnected graph raises :class:`Disconnected`; otherwise a maximum
    spanning forest is returned.
    """
    nodes = list(nodes)
    uf = UnionFind(nodes)
    edges = sorted(((min(e), max(e)) for e in weights), key=lambda e: (-weights_get(weights, e), e))
    tree = []
    for u, v in edges:
        if uf.union(u, v):
            tree.append((u, v))
            if len(tree) == len(nodes) - 1:
                break
    if require_spanning and len(nodes) and len(tree) != len(nodes) - 1:
        raise Disconnected(f"graph has {uf.components()} components; no spanning tree exists")
    return tree


def weights_get(weights: Mapping[tuple, float], edge: tuple) -> float:
    if edge in weights:
        return weights[edge]
    return weights[(edge[1], edge[0])]
