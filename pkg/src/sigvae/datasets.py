"""Dataset readers: plain edge lists and the LINQS citation layout.

Builtin names resolve to files under ``$SIGVAE_DATA`` (default
``~/.sigvae/data``); ``scripts/fetch_datasets.py`` documents where to obtain
them.  Nothing here touches the network.
"""

from __future__ import annotations

import os
import re
import warnings
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import Graph, canonical_edges, swiss_roll_graph, torus_graph


class ParseError(ValueError):
    pass


_HEADER = re.compile(r"#\s*n\s*=\s*(\d+)")

CITATION_DATASETS = ("cora", "citeseer", "pubmed")
EDGE_LIST_DATASETS = ("usair", "ns", "router", "power", "yeast")


def load_edge_list(path):
    """Read whitespace-separated ``u v`` lines; an optional ``# n=<count>`` header fixes n."""
    n = None
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                match = _HEADER.match(stripped)
                if match and n is None:
                    n = int(match.group(1))
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise ParseError(f"{path}:{lineno}: expected 'u v', got {stripped!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer node id in {stripped!r}") from None
            if u < 0 or v < 0:
                raise ParseError(f"{path}:{lineno}: negative node id")
            pairs.append((u, v))
    edges = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    top = int(edges.max()) + 1 if edges.size else 0
    if n is None:
        n = top
    elif top > n:
        raise ParseError(f"{path}: node id {top - 1} exceeds header n={n}")
    edges, loops = canonical_edges(edges)
    if loops:
        warnings.warn(f"{path}: dropped {loops} self-loop lines", RuntimeWarning)
    return Graph(n, edges, meta={"source": str(path), "dropped_self_loops": loops})


def write_edge_list(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def load_citation_dataset(content_path, cites_path):
    """Read ``<id> <feat_1> ... <feat_M> <label>`` rows and ``<target> <source>`` citations."""
    ids, rows, labels = [], [], []
    width = None
    with open(content_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            feats = parts[1:-1]
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise ParseError(f"{content_path}:{lineno}: document {parts[0]!r} has "
                                 f"{len(feats)} features, expected {width}")
            ids.append(parts[0])
            rows.append(np.asarray(feats, dtype=np.float64))
            labels.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    if len(index) != len(ids):
        raise ParseError(f"{content_path}: duplicate document ids")
    classes = sorted(set(labels))
    y = np.asarray([classes.index(lab) for lab in labels], dtype=np.int64)
    x = sp.csr_matrix(np.vstack(rows)) if rows else sp.csr_matrix((0, 0))

    pairs, dropped = [], 0
    with open(cites_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 2:
                continue
            a, b = index.get(parts[0]), index.get(parts[1])
            if a is None or b is None:
                dropped += 1
                continue
            pairs.append((a, b))
    edges, loops = canonical_edges(pairs, len(ids))
    meta = {"source": str(content_path), "dropped_citations": dropped,
            "dropped_self_loops": loops, "classes": classes}
    return Graph(len(ids), edges, x, y, meta)


def data_root():
    return Path(os.environ.get("SIGVAE_DATA", Path.home() / ".sigvae" / "data"))


def dataset_paths(name):
    """Expected on-disk location(s) of a builtin dataset."""
    name = name.lower()
    root = data_root()
    if name in CITATION_DATASETS:
        return [root / name / f"{name}.content", root / name / f"{name}.cites"]
    if name in EDGE_LIST_DATASETS:
        return [root / f"{name}.txt"]
    raise KeyError(f"unknown dataset {name!r}")


def load_dataset(source):
    """Resolve a dataset name or path.

    Accepted forms: a builtin name (``cora``, ``ns``, ...), ``swiss_roll[:n]``,
    ``torus:<rows>x<cols>``, a path to an edge list, or
    ``<content>,<cites>`` for the citation layout.
    """
    source = str(source)
    low = source.lower()
    if low.startswith("swiss_roll"):
        n = int(low.split(":")[1]) if ":" in low else 200
        return swiss_roll_graph(n, seed=0)
    if low.startswith("torus:"):
        r, c = low.split(":")[1].split("x")
        return torus_graph(int(r), int(c))
    if low in CITATION_DATASETS or low in EDGE_LIST_DATASETS:
        paths = dataset_paths(low)
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise FileNotFoundError(f"dataset {low!r} not found; missing {', '.join(missing)} "
                                    f"(set SIGVAE_DATA or see scripts/fetch_datasets.py)")
        g = load_citation_dataset(*paths) if low in CITATION_DATASETS else load_edge_list(paths[0])
        g.meta["name"] = low
        return g
    if "," in source:
        content, cites = source.split(",", 1)
        for p in (content, cites):
            if not Path(p).exists():
                raise FileNotFoundError(f"no such file: {p}")
        return load_citation_dataset(content, cites)
    if not Path(source).exists():
        raise FileNotFoundError(f"no such file or dataset: {source}")
    return load_edge_list(source)


def dataset_available(name):
    try:
        return all(p.exists() for p in dataset_paths(name))
    except KeyError:
        return False
