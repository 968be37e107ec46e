"""Independent brute-force reference implementations used to verify the package.

Everything here is written the slow, obvious way (explicit loops, explicit
Kronecker products, full enumerations) and deliberately shares no code with
the library beyond its public data types.
"""

import itertools
import math

import numpy as np

from subteam.kernels import LabeledGraph


def naive_softmax(e: np.ndarray) -> np.ndarray:
    """Textbook row softmax without max-subtraction."""
    out = np.empty_like(e, dtype=float)
    for i in range(e.shape[0]):
        expd = np.array([math.exp(v) for v in e[i]])
        out[i] = expd / expd.sum()
    return out


def naive_pair_sim(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ni = np.linalg.norm(p[i])
            nj = np.linalg.norm(q[j])
            if ni > 0 and nj > 0:
                out[i, j] = float(p[i] @ q[j]) / (ni * nj)
    return out


def naive_skill_loss(x: np.ndarray, c: np.ndarray) -> float:
    y1 = naive_pair_sim(x, x)
    y2 = naive_pair_sim(c, c)
    y3 = naive_pair_sim(y1, y2)
    return -sum(y3[i, i] for i in range(y3.shape[0]))


def naive_structural_loss(a: np.ndarray, c: np.ndarray) -> float:
    residual = a - c @ c.T
    return math.sqrt(sum(v * v for v in residual.ravel()))


def naive_clustering_loss(c: np.ndarray) -> float:
    total = 0.0
    for row in c:
        for v in row:
            if v > 0:
                total -= v * math.log(v)
    return total / c.shape[0]


def naive_cosine(u, v) -> float:
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def naive_contrastive(batch, z: np.ndarray) -> float:
    total = 0.0
    for team, sub in batch:
        team = tuple(getattr(team, "members", team))
        rem = sorted(set(team) - set(sub))
        g_sub = z[list(sub)].mean(axis=0)
        g_rem = z[rem].mean(axis=0)
        total += naive_cosine(g_sub, g_rem)
    return -total / len(batch)


def _explicit_kron_pieces(g1: LabeledGraph, g2: LabeledGraph):
    n1, n2 = g1.size, g2.size
    lx = np.zeros((n1 * n2, n1 * n2))
    for i in range(g1.labels.shape[1]):
        lx += np.kron(np.diag(g1.labels[:, i]), np.diag(g2.labels[:, i]))
    ax = lx @ np.kron(g1.adjacency, g2.adjacency)
    x = np.full(n1 * n2, 1.0 / (n1 * n2))
    return lx, ax, x


def rw_kernel_dense(g1: LabeledGraph, g2: LabeledGraph, decay: float) -> float:
    """Direct dense solve of the walk-kernel linear system on explicit matrices."""
    lx, ax, x = _explicit_kron_pieces(g1, g2)
    n = ax.shape[0]
    return float(x @ np.linalg.solve(np.eye(n) - decay * ax, lx @ x))


def rw_kernel_series(g1: LabeledGraph, g2: LabeledGraph, decay: float, terms: int) -> float:
    """Truncated power series sum_k decay^k y A^k (Lx x) on explicit matrices."""
    lx, ax, x = _explicit_kron_pieces(g1, g2)
    term = lx @ x
    total = 0.0
    for _ in range(terms + 1):
        total += float(x @ term)
        term = decay * (ax @ term)
    return total


def sp_kernel_brute(g1: LabeledGraph, g2: LabeledGraph) -> float:
    """Quadruple loop over ordered path pairs with exact length equality."""

    def dists(adj):
        n = adj.shape[0]
        d = np.where(adj > 0, adj.astype(float), np.inf)
        np.fill_diagonal(d, 0.0)
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    d[i, j] = min(d[i, j], d[i, k] + d[k, j])
        return d

    d1, d2 = dists(g1.adjacency), dists(g2.adjacency)
    total = 0.0
    for u in range(g1.size):
        for v in range(g1.size):
            if u == v or not np.isfinite(d1[u, v]):
                continue
            for up in range(g2.size):
                for vp in range(g2.size):
                    if up == vp or not np.isfinite(d2[up, vp]):
                        continue
                    if d1[u, v] == d2[up, vp]:
                        total += float(g1.labels[u] @ g2.labels[up]) * float(
                            g1.labels[v] @ g2.labels[vp]
                        )
    return total


def marginalized_dense(g1: LabeledGraph, g2: LabeledGraph, gamma: float) -> float:
    """Direct solve of the synchronized-walk fixed point on the explicit product space."""

    def transition(adj):
        rows = adj.sum(axis=1, keepdims=True)
        return np.divide(adj, rows, out=np.zeros_like(adj), where=rows > 0)

    kvec = (g1.labels @ g2.labels.T).ravel()
    t = np.kron(transition(g1.adjacency), transition(g2.adjacency))
    n = kvec.size
    r = np.linalg.solve(np.eye(n) - (1 - gamma) * np.diag(kvec) @ t, kvec)
    return float(r.mean())


def marginalized_mc(g1: LabeledGraph, g2: LabeledGraph, gamma: float, walks: int, seed: int):
    """Monte-Carlo estimate with standard error: synchronized terminating walks.

    Each walk accumulates the running label-product at every visited pair;
    the kernel is the expectation of that accumulated sum.
    """
    rng = np.random.default_rng(seed)
    k = g1.labels @ g2.labels.T

    def cumulative(adj):
        rows = adj.sum(axis=1, keepdims=True)
        p = np.divide(adj, rows, out=np.zeros_like(adj), where=rows > 0)
        return p.cumsum(axis=1), adj.sum(axis=1) > 0

    c1, live1 = cumulative(g1.adjacency)
    c2, live2 = cumulative(g2.adjacency)
    u = rng.integers(g1.size, size=walks)
    v = rng.integers(g2.size, size=walks)
    prod = k[u, v].copy()
    total = prod.copy()
    active = np.ones(walks, dtype=bool)
    while True:
        cont = active & (rng.random(walks) < 1 - gamma) & live1[u] & live2[v]
        if not cont.any():
            break
        active = cont
        idx = np.flatnonzero(active)
        u[idx] = (rng.random(idx.size)[:, None] < c1[u[idx]]).argmax(axis=1)
        v[idx] = (rng.random(idx.size)[:, None] < c2[v[idx]]).argmax(axis=1)
        prod[idx] *= k[u[idx], v[idx]]
        total[idx] += prod[idx]
    return float(total.mean()), float(total.std(ddof=1) / math.sqrt(walks))


def ged_brute(g1: LabeledGraph, g2: LabeledGraph) -> float:
    """Minimum edit cost over every subset of kept nodes and every injection."""
    n1, n2 = g1.size, g2.size
    a1, a2 = g1.adjacency, g2.adjacency
    best = math.inf
    for kept_mask in itertools.product((False, True), repeat=n1):
        kept = [u for u in range(n1) if kept_mask[u]]
        if len(kept) > n2:
            continue
        for targets in itertools.permutations(range(n2), len(kept)):
            mapping = dict(zip(kept, targets))
            cost = (n1 - len(kept)) + (n2 - len(kept))
            for u, t in mapping.items():
                if not np.array_equal(g1.labels[u], g2.labels[t]):
                    cost += 1
            for u in range(n1):
                for w in range(u + 1, n1):
                    w1 = a1[u, w]
                    if u in mapping and w in mapping:
                        w2 = a2[mapping[u], mapping[w]]
                        if w1 > 0 and w2 > 0:
                            cost += 0 if w1 == w2 else 1
                        elif w1 > 0 or w2 > 0:
                            cost += 1
                    elif w1 > 0:
                        cost += 1
            target_set = set(targets)
            for i in range(n2):
                for j in range(i + 1, n2):
                    if a2[i, j] > 0 and not (i in target_set and j in target_set):
                        cost += 1
            best = min(best, cost)
    return float(best)


def random_labeled_graph(rng, n: int, d: int, edge_p: float = 0.6, label_scale: float = 0.5):
    """Random symmetric weighted graph with small non-negative labels."""
    upper = np.triu((rng.random((n, n)) < edge_p).astype(float) * rng.uniform(0.5, 1.5, (n, n)), 1)
    return LabeledGraph(adjacency=upper + upper.T, labels=rng.uniform(0, label_scale, (n, d)))
