"""Independent reference implementations used by the tests."""

from __future__ import annotations

import itertools

import numpy as np


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    cond = u - (css - 1) / k > 0
    r = k[cond][-1]
    tau = (css[r - 1] - 1) / r
    return np.maximum(v - tau, 0.0)


def marginal_matrix(shape: tuple[int, ...], clique: tuple[int, ...]) -> np.ndarray:
    """0/1 matrix mapping a full joint (row-major) to the clique marginal."""
    n = int(np.prod(shape))
    idx = np.array(list(itertools.product(*[range(s) for s in shape])))
    cshape = tuple(shape[a] for a in clique)
    rows = np.ravel_multi_index(tuple(idx[:, a] for a in clique), cshape) if clique else np.zeros(n, int)
    M = np.zeros((int(np.prod(cshape)), n))
    M[rows, np.arange(n)] = 1.0
    return M


def measurement_system(shape, log, total):
    """Stack (A, b) with loss ||A p - b||^2 over the explicit joint ``p``."""
    rows, rhs = [], []
    for m in log:
        M = total * marginal_matrix(shape, m.clique)
        if m.kind == "identity":
            Q = m.weight * np.eye(M.shape[0])
        else:
            Q = np.zeros((m.values.size, M.shape[0]))
            Q[np.arange(m.values.size), m.cells] = m.weight
        s = m.row_scales[:, None]
        rows.append(s * (Q @ M))
        rhs.append(m.row_scales * m.values)
    return np.vstack(rows), np.concatenate(rhs)


def simplex_least_squares(A: np.ndarray, b: np.ndarray, iters: int = 20000) -> tuple[np.ndarray, float]:
    """Accelerated projected gradient for min ||A p - b||^2 over the simplex."""
    n = A.shape[1]
    L = 2 * np.linalg.norm(A, 2) ** 2
    p = np.full(n, 1.0 / n)
    z, t = p.copy(), 1.0
    best = np.inf
    for _ in range(iters):
        g = 2 * A.T @ (A @ z - b)
        p_new = project_simplex(z - g / L)
        t_new = (1 + np.sqrt(1 + 4 * t * t)) / 2
        z = p_new + (t - 1) / t_new * (p_new - p)
        p, t = p_new, t_new
        f = float(np.sum((A @ p - b) ** 2))
        best = min(best, f)
    return p, best


def brute_force_joint(shape, theta: dict) -> np.ndarray:
    """Explicit P_theta over every cell of the domain."""
    logp = np.zeros(shape)
    for clique, t in theta.items():
        view = [shape[a] if a in clique else 1 for a in range(len(shape))]
        logp = logp + t.reshape(view)
    p = np.exp(logp - logp.max())
    return p / p.sum()


def kruskal_max(d: int, weights: dict) -> set:
    """Plain Kruskal with a dict-based component label (no union-find)."""
    comp = list(range(d))
    tree = set()
    for (i, j) in sorted(weights, key=lambda e: (-weights[e], e)):
        if comp[i] != comp[j]:
            old, new = comp[j], comp[i]
            comp = [new if c == old else c for c in comp]
            tree.add((i, j))
    return tree


def brute_mutual_information(x: np.ndarray, y: np.ndarray) -> float:
    m = len(x)
    total = 0.0
    for a in set(x.tolist()):
        for b in set(y.tolist()):
            pab = np.sum((x == a) & (y == b)) / m
            if pab > 0:
                total += pab * np.log(pab / (np.sum(x == a) / m * np.sum(y == b) / m))
    return total
