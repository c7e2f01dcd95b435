import numpy as np
import pytest

from sigvae.datasets import (
    ParseError,
    dataset_available,
    load_citation_dataset,
    load_dataset,
    load_edge_list,
    write_edge_list,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_edge_list_basic(tmp_path):
    g = load_edge_list(write(tmp_path / "g.txt", "0 1\n1 2"))
    assert g.n == 3
    np.testing.assert_array_equal(g.edges, [[0, 1], [1, 2]])
    np.testing.assert_array_equal(g.features.toarray(), np.eye(3))


def test_edge_list_duplicates_collapse(tmp_path):
    g = load_edge_list(write(tmp_path / "g.txt", "0 1\n0 1\n1 0\n"))
    np.testing.assert_array_equal(g.edges, [[0, 1]])


def test_edge_list_header_keeps_isolated_nodes(tmp_path):
    g = load_edge_list(write(tmp_path / "g.txt", "# n=5\n0 1\n"))
    assert g.n == 5 and len(g.edges) == 1
    assert (g.degrees() == 0).sum() == 3


def test_edge_list_drops_self_loops_with_warning(tmp_path):
    with pytest.warns(RuntimeWarning, match="2 self-loop"):
        g = load_edge_list(write(tmp_path / "g.txt", "0 0\n0 1\n2 2\n"))
    assert g.meta["dropped_self_loops"] == 2
    np.testing.assert_array_equal(g.edges, [[0, 1]])


@pytest.mark.parametrize("bad", ["0 1\n7\n", "0 1\nx y\n", "0 -1\n"])
def test_edge_list_malformed_line_reports_line_number(tmp_path, bad):
    path = write(tmp_path / "g.txt", bad)
    with pytest.raises(ParseError, match=r"g\.txt:2|g\.txt:1"):
        load_edge_list(path)


def test_edge_list_round_trip(tmp_path):
    g = load_edge_list(write(tmp_path / "g.txt", "# n=6\n0 3\n2 4\n"))
    write_edge_list(g, tmp_path / "h.txt")
    h = load_edge_list(tmp_path / "h.txt")
    assert h.n == 6
    np.testing.assert_array_equal(h.edges, g.edges)


def test_citation_toy(tmp_path):
    content = write(tmp_path / "t.content", "p1 1 0 1 A\np2 0 1 0 B\n")
    cites = write(tmp_path / "t.cites", "p1 p2\n")
    g = load_citation_dataset(content, cites)
    assert g.n == 2 and g.features.shape == (2, 3)
    np.testing.assert_array_equal(g.edges, [[0, 1]])
    np.testing.assert_array_equal(g.labels, [0, 1])


def test_citation_unknown_ids_are_counted(tmp_path):
    content = write(tmp_path / "t.content", "p1 1 0 A\np2 0 1 B\n")
    cites = write(tmp_path / "t.cites", "p1 p2\np1 ghost\n")
    g = load_citation_dataset(content, cites)
    assert g.meta["dropped_citations"] == 1 and len(g.edges) == 1


def test_citation_arity_mismatch_names_row(tmp_path):
    content = write(tmp_path / "t.content", "p1 1 0 A\np2 0 1 1 B\n")
    cites = write(tmp_path / "t.cites", "")
    with pytest.raises(ParseError, match="p2"):
        load_citation_dataset(content, cites)


def test_builtin_dataset_missing_names_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("SIGVAE_DATA", str(tmp_path))
    assert not dataset_available("cora")
    with pytest.raises(FileNotFoundError, match="cora.content"):
        load_dataset("cora")


def test_builtin_dataset_resolves_under_data_root(tmp_path, monkeypatch):
    monkeypatch.setenv("SIGVAE_DATA", str(tmp_path))
    write(tmp_path / "ns.txt", "0 1\n1 2\n")
    assert dataset_available("ns")
    g = load_dataset("ns")
    assert g.meta["name"] == "ns" and g.n == 3


def test_synthetic_specs():
    assert load_dataset("torus:3x4").n == 12
    assert load_dataset("swiss_roll:80").n == 80


def test_missing_path():
    with pytest.raises(FileNotFoundError, match="nope.txt"):
        load_dataset("nope.txt")
