import io

import numpy as np
import pytest

from graphcumulants.graph import (EdgeListError, Graph, GraphError, GraphSample, SbmSpec,
                                  assortative_sbm, erdos_renyi, heterogeneous_sbm, load_edge_list,
                                  load_graph, match_edge_density, sample_sbm, sample_sbm_adjacency,
                                  save_graph, subsample_nodes)


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 3)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    g = Graph.from_edges(4, [(2, 1), (0, 3)])
    assert g.edges.tolist() == [[0, 3], [1, 2]]
    assert g.m == 2 and g.density == pytest.approx(2 / 6)
    with pytest.raises(ValueError):
        g.edges[0, 0] = 5


def test_adjacency_and_degrees():
    g = Graph.complete(5)
    A = g.adjacency()
    assert A.sum() == 20 and np.all(np.diag(A) == 0)
    assert g.degrees().tolist() == [4] * 5
    assert Graph.from_adjacency(A) == g


def test_json_round_trip(tmp_path):
    g = Graph.from_edges(5, [(0, 1), (3, 4)])
    p = tmp_path / "g.json"
    save_graph(g, p)
    assert load_graph(p) == g
    with pytest.raises(GraphError):
        Graph.from_json({"edges": []})


def test_edge_list_parsing():
    text = b"# comment\n\na b\nb c\nc a\nb a\nd d\n"
    g, drops = load_edge_list(text)
    assert g.n == 4 and g.m == 3
    assert drops.duplicates == 1 and drops.self_loops == 1
    g2, _ = load_edge_list(io.StringIO("10 20\n20 30\n"))
    assert g2.edges.tolist() == [[0, 1], [1, 2]]


def test_edge_list_bad_line():
    with pytest.raises(EdgeListError) as exc:
        load_edge_list(b"0 1\n0 1 2\n")
    assert exc.value.lineno == 2


def test_edge_list_path(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 2\n")
    assert load_graph(p).m == 2


def test_sample_requires_equal_n():
    with pytest.raises(GraphError):
        GraphSample([Graph.complete(3), Graph.complete(4)])
    with pytest.raises(GraphError):
        GraphSample([])
    s = GraphSample([Graph.complete(3)] * 2)
    assert s.n == 3 and s.s == 2


def test_sbm_spec_validation():
    with pytest.raises(GraphError):
        SbmSpec(np.array([0.5, 0.5]), np.array([[0.5, 0.2], [0.3, 0.5]]))
    with pytest.raises(GraphError):
        SbmSpec(np.array([0.6, 0.5]), np.eye(2) * 0.5)
    with pytest.raises(GraphError):
        heterogeneous_sbm(0.9, 0.5)
    spec = assortative_sbm(0.5, 0.25)
    assert SbmSpec.from_json(spec.to_json()).B.tolist() == spec.B.tolist()


def test_sbm_edge_density(rng):
    # mean edge density of ER(p) over many graphs
    A = sample_sbm_adjacency(erdos_renyi(0.3), 30, 200, rng)
    dens = A.sum(axis=(1, 2)) / (30 * 29)
    assert abs(dens.mean() - 0.3) < 4 * dens.std() / np.sqrt(200)
    g = sample_sbm(heterogeneous_sbm(0.5, 0.25), 40, rng)
    assert g.n == 40


def test_sbm_deterministic():
    a = sample_sbm(erdos_renyi(0.5), 20, np.random.default_rng(3))
    b = sample_sbm(erdos_renyi(0.5), 20, np.random.default_rng(3))
    assert a == b


def test_subsample_nodes(rng):
    G = sample_sbm(erdos_renyi(0.2), 60, rng)
    assert subsample_nodes(G, 60, rng) == G
    H = subsample_nodes(G, 30, rng)
    assert 0 < H.n < 60
    with pytest.raises(GraphError):
        subsample_nodes(G, 0, rng)


def test_subsample_preserves_induced_edges():
    G = sample_sbm(erdos_renyi(0.3), 40, np.random.default_rng(8))
    rng = np.random.default_rng(9)
    keep = rng.random(40) < 0.5
    H = subsample_nodes(G, 20, np.random.default_rng(9))
    assert H == G.induced(keep)
    kept = np.flatnonzero(keep)
    expect = {(int(np.searchsorted(kept, u)), int(np.searchsorted(kept, v)))
              for u, v in G.edges if keep[u] and keep[v]}
    assert {tuple(e) for e in H.edges.tolist()} == expect


def test_match_edge_density(rng):
    G = sample_sbm(erdos_renyi(0.5), 30, rng)
    assert match_edge_density(G, G.density, rng) == G
    H = match_edge_density(G, 0.2, rng)
    assert H.density <= 0.2 and (H.m + 1) / 435 > 0.2
    assert H.edge_set() <= G.edge_set()
    with pytest.raises(GraphError):
        match_edge_density(H, 0.9, rng)
