#!/usr/bin/env python3
"""Download the benchmark graphs into the layout ``sigvae.datasets`` expects.

    python scripts/fetch_datasets.py [--root DIR] [names ...]

The library itself never touches the network. Files land under ``--root``
(default ``$SIGVAE_DATA`` or ``~/.sigvae/data``):

    cora/cora.content, cora/cora.cites            LINQS tarball
    citeseer/citeseer.content, citeseer/...       LINQS tarball
    ns.txt, power.txt                             edge lists converted from GML

The URLs below were the canonical hosts when this script was written; they
could not be checked from an offline build machine, so a moved file shows up
as an HTTP error here rather than a silent fallback. USAir, Router and Yeast
have no stable primary host; place them as ``<name>.txt`` edge lists by hand.
"""

import argparse
import io
import re
import sys
import tarfile
import urllib.request
import zipfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from sigvae.datasets import data_root  # noqa: E402

SOURCES = {
    "cora": ("https://linqs-data.soe.ucsc.edu/public/lbc/cora.tgz", "linqs"),
    "citeseer": ("https://linqs-data.soe.ucsc.edu/public/lbc/citeseer.tgz", "linqs"),
    "ns": ("http://www-personal.umich.edu/~mejn/netdata/netscience.zip", "gml"),
    "power": ("http://www-personal.umich.edu/~mejn/netdata/power.zip", "gml"),
}


def fetch(url):
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def unpack_linqs(name, blob, root):
    target = root / name
    target.mkdir(parents=True, exist_ok=True)
    with tarfile.open(fileobj=io.BytesIO(blob)) as tar:
        for member in tar.getmembers():
            base = Path(member.name).name
            if base in (f"{name}.content", f"{name}.cites"):
                (target / base).write_bytes(tar.extractfile(member).read())
    return [target / f"{name}.content", target / f"{name}.cites"]


def gml_edges(text):
    """Source/target pairs of every ``edge [...]`` block; ids are remapped later by the loader."""
    edges = []
    for block in re.findall(r"edge\s*\[(.*?)\]", text, flags=re.S):
        s = re.search(r"source\s+(\d+)", block)
        t = re.search(r"target\s+(\d+)", block)
        if s and t:
            edges.append((int(s.group(1)), int(t.group(1))))
    return edges


def unpack_gml(name, blob, root):
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        gml = next(n for n in zf.namelist() if n.endswith(".gml"))
        text = zf.read(gml).decode("utf-8", errors="replace")
    edges = gml_edges(text)
    ids = sorted({v for e in edges for v in e})
    index = {v: i for i, v in enumerate(ids)}
    out = root / f"{name}.txt"
    root.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"# {name}: converted from {gml}, {len(ids)} nodes\n")
        for u, v in edges:
            fh.write(f"{index[u]} {index[v]}\n")
    return [out]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", help=f"any of {', '.join(SOURCES)} (default: all)")
    parser.add_argument("--root", type=Path, default=None)
    args = parser.parse_args(argv)
    unknown = sorted(set(args.names) - set(SOURCES))
    if unknown:
        parser.error(f"unknown dataset(s): {', '.join(unknown)}")
    args.names = args.names or list(SOURCES)
    root = args.root or data_root()
    status = 0
    for name in args.names:
        url, kind = SOURCES[name]
        try:
            blob = fetch(url)
        except OSError as exc:
            print(f"{name}: download failed from {url}: {exc}", file=sys.stderr)
            status = 1
            continue
        paths = unpack_linqs(name, blob, root) if kind == "linqs" else unpack_gml(name, blob, root)
        print(f"{name}: " + ", ".join(str(p) for p in paths))
    return status


if __name__ == "__main__":
    sys.exit(main())
