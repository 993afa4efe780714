import numpy as np
import pytest
from hypothesis import given, strategies as st

from ggmcomposite.glasso import GlassoConfig, glasso_solve
from ggmcomposite.graphs import (
    Graph, compare_graphs, graph_of_precision, path_through, project_onto_graph, support_mask,
)


@st.composite
def graphs(draw, max_p=8):
    p = draw(st.integers(2, max_p))
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(p, frozenset(chosen))


def test_graph_basics():
    g = Graph(4, frozenset([(2, 1), (0, 3)]))
    assert g.sorted_edges() == [(0, 3), (1, 2)]
    assert (1, 2) in g and (2, 1) in g and (0, 1) not in g
    assert g.neighbors(1) == [2]
    assert list(g.degrees()) == [1, 1, 1, 1]
    assert len(Graph.complete(5)) == 10 and Graph.complete(5).is_complete()
    with pytest.raises(ValueError):
        Graph(3, frozenset([(1, 1)]))
    with pytest.raises(ValueError):
        Graph(3, frozenset([(0, 3)]))


def test_add_remove_subgraph():
    g = Graph.empty(3).add((0, 2))
    assert Graph.empty(3).is_subgraph_of(g) and not g.is_subgraph_of(Graph.empty(3))
    assert g.remove((2, 0)) == Graph.empty(3)


@given(graphs())
def test_edge_list_roundtrip(g):
    assert Graph.from_edge_list(g.to_edge_list(), g.p) == g
    assert Graph.from_adjacency(g.adjacency()) == g
    assert len(g) <= g.p * (g.p - 1) // 2


def test_edge_list_comments_and_errors():
    assert Graph.from_edge_list("# header\n0 1  # first\n\n", 3) == Graph(3, frozenset([(0, 1)]))
    with pytest.raises(ValueError):
        Graph.from_edge_list("0 1 2\n", 3)


def test_graph_of_precision_identity_and_chain():
    assert len(graph_of_precision(np.eye(5))) == 0
    p = 6
    k = np.eye(p) + 0.5 * (np.eye(p, k=1) + np.eye(p, k=-1))
    assert graph_of_precision(k, 1e-8).sorted_edges() == [(i, i + 1) for i in range(p - 1)]


def test_graph_of_precision_huge_rho_glasso(rng):
    x = rng.standard_normal((30, 5))
    s = np.cov(x.T, bias=True)
    res = glasso_solve(s, GlassoConfig(rho=10 * np.max(np.abs(s))))
    assert len(graph_of_precision(res.model.kappa)) == 0


def test_projection_full_and_empty(rng):
    m = rng.standard_normal((4, 4))
    np.testing.assert_array_equal(project_onto_graph(m, Graph.complete(4)), m)
    np.testing.assert_array_equal(project_onto_graph(m, Graph.empty(4)), np.diag(np.diag(m)))
    with pytest.raises(ValueError):
        project_onto_graph(m, Graph.empty(3))


@given(graphs(), st.integers(0, 10_000))
def test_projection_mask_oracle(g, seed):
    m = np.random.default_rng(seed).standard_normal((g.p, g.p))
    oracle = np.zeros_like(m)
    for i in range(g.p):
        for j in range(g.p):
            if i == j or (min(i, j), max(i, j)) in g.edges:
                oracle[i, j] = m[i, j]
    np.testing.assert_array_equal(project_onto_graph(m, g), oracle)


@given(graphs(), st.integers(0, 10_000), st.floats(-3, 3))
def test_projection_idempotent_linear(g, seed, a):
    r = np.random.default_rng(seed)
    m1, m2 = r.standard_normal((2, g.p, g.p))
    pr = project_onto_graph(m1, g)
    np.testing.assert_array_equal(project_onto_graph(pr, g), pr)
    np.testing.assert_allclose(project_onto_graph(a * m1 + m2, g), a * pr + project_onto_graph(m2, g), atol=1e-12)


@given(graphs(), st.integers(0, 10_000))
def test_graph_of_projection_is_subgraph(g, seed):
    m = np.random.default_rng(seed).standard_normal((g.p, g.p))
    m = m + m.T
    assert graph_of_precision(project_onto_graph(m, g)).is_subgraph_of(g)


def test_support_mask():
    mask = support_mask(Graph(3, frozenset([(0, 2)])))
    assert mask.tolist() == [[True, False, True], [False, True, False], [True, False, True]]


def test_compare_graphs():
    g = Graph(5, frozenset([(0, 1), (1, 2), (3, 4)]))
    m = compare_graphs(g, g)
    assert (m.precision, m.recall, m.hamming) == (1.0, 1.0, 0)
    assert compare_graphs(Graph.empty(5), g).recall == 0.0
    truth = Graph(5, frozenset([(0, 1), (1, 2), (2, 3)]))
    est = Graph(5, frozenset([(0, 1), (1, 2), (0, 4)]))
    m = compare_graphs(est, truth)
    assert (m.true_positive, m.false_positive, m.false_negative, m.hamming) == (2, 1, 1, 2)
    with pytest.raises(ValueError):
        compare_graphs(Graph.empty(4), g)


@given(graphs(), graphs())
def test_metrics_ranges(a, b):
    if a.p != b.p:
        return
    m = compare_graphs(a, b)
    assert 0 <= m.precision <= 1 and 0 <= m.recall <= 1
    assert m.hamming == m.false_positive + m.false_negative


def test_path_through_visits_waypoints():
    rng = np.random.default_rng(0)
    a = Graph.empty(5)
    b = Graph(5, frozenset([(0, 1), (2, 3)]))
    c = Graph(5, frozenset([(0, 1), (1, 4), (3, 4)]))
    path, marks = path_through([a, b, c, Graph.complete(5)], rng)
    assert [path[k] for k in marks] == [a, b, c, Graph.complete(5)]
    for g, h in zip(path, path[1:]):
        assert len(g.edges ^ h.edges) == 1
