"""Undirected graphs, adjacency normalization, edge splits, generators and statistics."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def canonical_edges(edges, n=None):
    """Return edges as a sorted, deduplicated (m, 2) int array with i < j.

    Self-loops are removed.  Returns ``(edges, n_self_loops)``.
    """
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if n is not None and e.size and (e.min() < 0 or e.max() >= n):
        raise ValueError(f"edge endpoint outside [0, {n})")
    loops = e[:, 0] == e[:, 1]
    e = np.sort(e[~loops], axis=1)
    if e.size:
        e = np.unique(e, axis=0)
    return e.reshape(-1, 2), int(loops.sum())


@dataclass(eq=False)
class Graph:
    """Simple undirected graph with node attributes.

    ``features`` may be a dense array or a scipy sparse matrix; when omitted
    it is the (sparse) identity.
    """

    n: int
    edges: np.ndarray
    features: object = None
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = int(self.n)
        edges, loops = canonical_edges(self.edges, self.n)
        if loops:
            raise ValueError("Graph edges contain self-loops; use Graph.from_edges to drop them")
        if len(edges) != len(np.asarray(self.edges).reshape(-1, 2)):
            raise ValueError("Graph edges must be deduplicated; use Graph.from_edges")
        self.edges = edges
        if self.features is None:
            self.features = sp.identity(self.n, format="csr")
        if self.features.shape[0] != self.n:
            raise ValueError(f"features have {self.features.shape[0]} rows for {self.n} nodes")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if len(self.labels) != self.n:
                raise ValueError("labels length must equal n")

    @classmethod
    def from_edges(cls, n, edges, features=None, labels=None, meta=None):
        edges, loops = canonical_edges(edges, n)
        meta = dict(meta or {})
        if loops:
            meta["dropped_self_loops"] = loops
        return cls(n, edges, features, labels, meta)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_features(self):
        return self.features.shape[1]

    def adjacency(self, edges=None):
        """Symmetric 0/1 CSR adjacency built from ``edges`` (default: all edges)."""
        return adjacency_matrix(self.n, self.edges if edges is None else edges)

    def degrees(self):
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def with_features(self, features):
        return Graph(self.n, self.edges, features, self.labels, dict(self.meta))


def adjacency_matrix(n, edges):
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    a.data[:] = 1.0
    return a


def normalize_adjacency(g, edges=None):
    """D^-1/2 (A + I) D^-1/2 with degrees of A + I, as CSR."""
    a = g.adjacency(edges) + sp.identity(g.n, format="csr")
    d = np.asarray(a.sum(axis=1)).ravel()
    d_inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    return (d_inv_sqrt @ a @ d_inv_sqrt).tocsr()


# edge splits ---------------------------------------------------------------

@dataclass(eq=False)
class EdgeSplit:
    n: int
    train_pos: np.ndarray
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int

    _LISTS = ("train_pos", "val_pos", "val_neg", "test_pos", "test_neg")

    def to_json(self):
        record = {"format": "sigvae-edge-split", "version": 1, "n": self.n, "seed": self.seed}
        for name in self._LISTS:
            record[name] = getattr(self, name).tolist()
        return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text):
        record = json.loads(text)
        if record.get("format") != "sigvae-edge-split":
            raise ValueError("not an edge-split file")
        lists = {k: np.asarray(record[k], dtype=np.int64).reshape(-1, 2) for k in cls._LISTS}
        return cls(n=record["n"], seed=record["seed"], **lists)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def sample_non_edges(n, forbidden, count, rng):
    """Uniformly sample ``count`` distinct pairs i<j not in ``forbidden`` (a set of codes i*n+j)."""
    available = n * (n - 1) // 2 - len(forbidden)
    if count > available:
        raise ValueError(f"graph too dense: need {count} non-edges, only {available} exist")
    chosen = []
    taken = set(forbidden)
    if count > available // 2:
        iu, ju = np.triu_indices(n, k=1)
        codes = iu * n + ju
        pool = codes[~np.isin(codes, np.fromiter(taken, dtype=np.int64, count=len(taken)))]
        picked = rng.choice(pool, size=count, replace=False)
        return np.stack([picked // n, picked % n], axis=1).astype(np.int64)
    while len(chosen) < count:
        need = count - len(chosen)
        i = rng.integers(0, n, size=2 * need + 16)
        j = rng.integers(0, n, size=2 * need + 16)
        for a, b in zip(i, j):
            if a == b:
                continue
            a, b = (a, b) if a < b else (b, a)
            code = int(a) * n + int(b)
            if code in taken:
                continue
            taken.add(code)
            chosen.append((a, b))
            if len(chosen) == count:
                break
    return np.asarray(chosen, dtype=np.int64).reshape(-1, 2)


def split_edges(g, seed, val_frac=0.05, test_frac=0.10):
    """Hold out val/test positives and draw an equal number of non-edges for each."""
    m = g.n_edges
    if m < 20:
        raise ValueError(f"need at least 20 edges to split, got {m}")
    rng = np.random.default_rng(seed)
    n_val = _round_half_up(val_frac * m)
    n_test = _round_half_up(test_frac * m)
    perm = rng.permutation(m)
    test_pos = g.edges[np.sort(perm[:n_test])]
    val_pos = g.edges[np.sort(perm[n_test:n_test + n_val])]
    train_pos = g.edges[np.sort(perm[n_test + n_val:])]
    forbidden = set((g.edges[:, 0] * g.n + g.edges[:, 1]).tolist())
    negs = sample_non_edges(g.n, forbidden, n_val + n_test, rng)
    return EdgeSplit(g.n, train_pos, val_pos, negs[n_test:], test_pos, negs[:n_test], int(seed))


# generators ----------------------------------------------------------------

def _knn_edges(points, k):
    from sklearn.neighbors import NearestNeighbors

    nn = NearestNeighbors(n_neighbors=k + 1).fit(points)
    _, idx = nn.kneighbors(points)
    src = np.repeat(np.arange(len(points)), k)
    return np.stack([src, idx[:, 1:].ravel()], axis=1)


def swiss_roll_graph(n=200, k=None, seed=0, target_edges=1244):
    """k-nearest-neighbour graph over points sampled on a Swiss roll.

    With ``k=None`` the neighbour count is chosen by bisection so that the
    edge count lands as close as possible to ``target_edges``.
    """
    from sklearn.datasets import make_swiss_roll

    points, _ = make_swiss_roll(n_samples=n, noise=0.0, random_state=seed)

    def build(kk):
        edges, _ = canonical_edges(_knn_edges(points, kk))
        return edges

    if k is None:
        lo, hi = 1, n - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if len(build(mid)) < target_edges:
                lo = mid + 1
            else:
                hi = mid
        candidates = [kk for kk in (lo - 1, lo) if kk >= 1]
        k = min(candidates, key=lambda kk: abs(len(build(kk)) - target_edges))
    if n < k + 1:
        raise ValueError(f"need n >= k + 1, got n={n}, k={k}")
    g = Graph(n, build(k), meta={"generator": "swiss_roll", "k": int(k), "seed": int(seed)})
    if connected_components(g) > 1:
        warnings.warn("swiss roll graph is disconnected", RuntimeWarning)
    return g


def torus_graph(rows, cols):
    if rows < 3 or cols < 3:
        raise ValueError("torus needs rows, cols >= 3")
    idx = np.arange(rows * cols).reshape(rows, cols)
    right = np.stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()], axis=1)
    down = np.stack([idx.ravel(), np.roll(idx, -1, axis=0).ravel()], axis=1)
    return Graph.from_edges(rows * cols, np.concatenate([right, down]),
                            meta={"generator": "torus", "rows": rows, "cols": cols})


# statistics ----------------------------------------------------------------

def connected_components(g):
    from scipy.sparse.csgraph import connected_components as cc

    return cc(g.adjacency(), directed=False)[0]


def clustering_coefficients(g):
    a = g.adjacency()
    deg = np.asarray(a.sum(axis=1)).ravel()
    tri = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    pairs = deg * (deg - 1) / 2.0
    out = np.zeros(g.n)
    ok = deg >= 2
    out[ok] = tri[ok] / pairs[ok]
    return out


def graph_stats(g):
    if g.n < 2:
        raise ValueError("graph_stats needs n >= 2")
    density = 2.0 * g.n_edges / (g.n * (g.n - 1))
    return {"density": density, "avg_clustering": float(clustering_coefficients(g).mean())}
