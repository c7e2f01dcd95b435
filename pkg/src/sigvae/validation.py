"""Input coercion shared by the estimator and the command line."""

from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .graph import Graph


def check_graph(obj, features=None):
    """Accept a :class:`Graph`, an n x n adjacency (dense or sparse) or an (m, 2) edge array."""
    if isinstance(obj, Graph):
        return obj if features is None else obj.with_features(features)
    if sp.issparse(obj):
        a = sp.coo_matrix(obj)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got {a.shape}")
        return _from_adjacency(a.shape[0], a.row, a.col, a.data, features)
    arr = np.asarray(obj)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1] and arr.shape[1] != 2:
        rows, cols = np.nonzero(arr)
        return _from_adjacency(arr.shape[0], rows, cols, arr[rows, cols], features)
    if arr.ndim == 2 and arr.shape[1] == 2:
        edges = check_pairs(arr)
        n = int(edges.max()) + 1 if edges.size else 0
        if features is not None:
            n = max(n, features.shape[0])
        return Graph.from_edges(n, edges, features)
    raise ValueError(f"expected a Graph, a square adjacency or an (m, 2) edge array; got shape {arr.shape}")


def _from_adjacency(n, rows, cols, vals, features):
    vals = np.asarray(vals, dtype=np.float64)
    if not np.isin(vals, (0.0, 1.0)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    dense_check = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    if (dense_check != dense_check.T).nnz:
        raise ValueError("adjacency must be symmetric")
    return Graph.from_edges(n, np.stack([rows, cols], axis=1), features)


def check_pairs(pairs, n=None, name="pairs"):
    arr = np.asarray(pairs)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (m, 2), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} must hold integer node ids")
        arr = arr.astype(np.int64)
    if (arr < 0).any():
        raise ValueError(f"{name} contain negative node ids")
    if n is not None and (arr >= n).any():
        raise ValueError(f"{name} reference node {int(arr.max())} but the graph has {n} nodes")
    return arr.astype(np.int64)


def check_node_ids(ids, n):
    ids = np.asarray(ids, dtype=np.int64).ravel()
    bad = ids[(ids < 0) | (ids >= n)]
    if bad.size:
        raise ValueError(f"unknown node id {int(bad[0])} (graph has {n} nodes)")
    return ids


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
