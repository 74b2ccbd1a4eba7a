import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from duosphere.graph import (GraphError, adjacency, build_graph, degree_vector,
                             induced_subgraph, normalized_adjacency)


def make(edges, n, m=2):
    x = np.arange(n * m, dtype=np.float64).reshape(n, m)
    return build_graph(edges, x, np.zeros(n, dtype=np.int64))


def test_build_graph_dedups_reciprocal_pairs():
    g = make([(0, 1), (1, 0)], 2)
    assert g.n_edges == 1
    assert g.edges.tolist() == [[0, 1]]
    a = adjacency(g).toarray()
    assert a.tolist() == [[0, 1], [1, 0]]


def test_build_graph_empty():
    g = make([], 3)
    assert adjacency(g).toarray().tolist() == [[0] * 3] * 3
    assert degree_vector(g, self_loops=False).tolist() == [0, 0, 0]


def test_build_graph_rejects_bad_endpoint():
    with pytest.raises(GraphError, match="3"):
        make([(0, 3)], 3)
    with pytest.raises(GraphError, match="-1"):
        make([(-1, 0)], 3)


def test_build_graph_rejects_row_mismatch():
    with pytest.raises(GraphError):
        build_graph([(0, 1)], np.zeros((3, 2)), np.zeros(2, dtype=np.int64))


def test_build_graph_drops_self_loops():
    g = make([(0, 0), (0, 1)], 2)
    assert g.edges.tolist() == [[0, 1]]


def test_build_graph_idempotent():
    g = make([(2, 1), (0, 1), (1, 2)], 3)
    g2 = build_graph(g.edges, g.attributes, g.labels)
    assert np.array_equal(g.edges, g2.edges)
    assert np.array_equal(g.attributes, g2.attributes)


def test_degree_vector_path():
    g = make([(0, 1)], 2)
    assert degree_vector(g, self_loops=False).tolist() == [1, 1]
    assert degree_vector(g, self_loops=True).tolist() == [2, 2]


def test_degree_vector_star():
    g = make([(0, 1), (0, 2), (0, 3), (0, 4)], 5)
    d = degree_vector(g, self_loops=False)
    assert d[0] == 4
    assert d[1:].tolist() == [1, 1, 1, 1]


def test_normalized_adjacency_path_no_self_loops():
    g = make([(0, 1)], 2)
    a = normalized_adjacency(g, self_loops=False).toarray()
    assert a.tolist() == [[0, 1], [1, 0]]


def test_normalized_adjacency_path_self_loops():
    # A+I on a 2-path gives degree 2 everywhere, so every entry is 1/2.
    g = make([(0, 1)], 2)
    a = normalized_adjacency(g, self_loops=True).toarray()
    assert np.allclose(a, 0.5)
    assert a[0, 0] == a[0, 1]


def test_normalized_adjacency_isolated_node():
    g = make([(0, 1)], 3)
    a = normalized_adjacency(g, self_loops=True).toarray()
    assert a[2, 2] == 1.0
    assert a[2, 0] == 0.0 and a[2, 1] == 0.0


def test_normalized_adjacency_symmetric_and_bounded():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 12))
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(len(iu)) < 0.4
        g = make(list(zip(iu[keep].tolist(), ju[keep].tolist())), n)
        for sl in (False, True):
            a = normalized_adjacency(g, self_loops=sl).toarray()
            assert np.array_equal(a, a.T)
            vals = a[a != 0]
            if len(vals):
                assert vals.min() > 0 and vals.max() <= 1.0
            d = degree_vector(g, self_loops=sl)
            assert a.sum(axis=1).max() <= np.sqrt(max(d.max(), 1)) + 1e-12


def test_induced_subgraph_relabels():
    g = build_graph([(0, 1), (1, 2), (0, 2)],
                    np.arange(6, dtype=float).reshape(3, 2),
                    np.array([0, 1, 2]))
    sub, order = induced_subgraph(g, [0, 2])
    assert order.tolist() == [0, 2]
    assert sub.n_nodes == 2
    assert sub.edges.tolist() == [[0, 1]]  # the (0,2) edge, relabeled
    assert sub.attributes.tolist() == [[0.0, 1.0], [4.0, 5.0]]
    assert sub.labels.tolist() == [0, 2]


@given(st.integers(2, 10), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=30, deadline=None)
def test_csr_validates_and_roundtrips(n, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < 0.5
    g = make(list(zip(iu[keep].tolist(), ju[keep].tolist())), n)
    csr = adjacency(g)
    csr.validate()
    dense = csr.toarray()
    assert np.array_equal(dense, dense.T)
    assert dense.sum() == 2 * g.n_edges
