import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketmodes.corrnet import (
    ConvergenceError,
    CorrMatrix,
    StockGraph,
    ZeroVarianceError,
    analyze_network,
    correlation_matrix,
    degree_sequence,
    eigenvector_centrality,
    local_clustering,
    louvain_communities,
    modularity,
    pagerank,
    threshold_graph,
)
from marketmodes.market_data import ReturnPanel

from conftest import graph_from_edges, random_graph


def returns_panel(matrix, tickers=None):
    matrix = np.asarray(matrix, dtype=float)
    tickers = tickers or [f"T{i}" for i in range(matrix.shape[1])]
    return ReturnPanel(tickers, list(range(matrix.shape[0])), matrix)


def random_corr(n, t, rng):
    x = rng.standard_normal((t, n)) + rng.standard_normal((t, 1))
    return correlation_matrix(returns_panel(x))


# -- correlation -------------------------------------------------------------


def test_self_and_anti_correlation(rng):
    x = rng.standard_normal(30)
    c = correlation_matrix(returns_panel(np.column_stack([x, x, -x])))
    assert c.values[0, 1] == pytest.approx(1.0, abs=1e-14)
    assert c.values[0, 2] == pytest.approx(-1.0, abs=1e-14)


def test_correlation_hand_oracle():
    a = [0.01, -0.02, 0.03, 0.00, 0.01]
    b = [0.02, -0.01, 0.01, 0.01, -0.02]
    c = [-0.01, 0.03, 0.00, 0.02, 0.01]
    cols = [a, b, c]
    got = correlation_matrix(returns_panel(np.column_stack(cols))).values

    def mean(v):
        return sum(v) / len(v)

    for i, j in itertools.product(range(3), repeat=2):
        x, y = cols[i], cols[j]
        cov = mean([p * q for p, q in zip(x, y)]) - mean(x) * mean(y)
        sx = math.sqrt(mean([p * p for p in x]) - mean(x) ** 2)
        sy = math.sqrt(mean([q * q for q in y]) - mean(y) ** 2)
        assert got[i, j] == pytest.approx(cov / (sx * sy), abs=1e-12)


def test_zero_variance_names_ticker():
    with pytest.raises(ZeroVarianceError, match="FLAT"):
        correlation_matrix(returns_panel([[0.1, 0.0], [0.2, 0.0], [0.0, 0.0]], ["OK", "FLAT"]))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 12), t=st.integers(3, 40), seed=st.integers(0, 10_000))
def test_correlation_psd_unit_diagonal(n, t, seed):
    c = random_corr(n, t, np.random.default_rng(seed)).values
    assert np.array_equal(np.diag(c), np.ones(n))
    assert np.abs(c - c.T).max() <= 1e-12
    assert np.linalg.eigvalsh(c).min() >= -1e-9


# -- threshold graph ---------------------------------------------------------


def test_threshold_zero_gives_complete_graph(rng):
    c = random_corr(3, 20, rng)
    g = threshold_graph(c, 0.0)
    assert g.n_nodes == 3 and g.n_edges == 3


def test_threshold_one_keeps_exact_pairs():
    v = np.array([[1.0, 1.0, 0.3], [1.0, 1.0, 0.3], [0.3, 0.3, 1.0]])
    g = threshold_graph(CorrMatrix(["A", "B", "C"], v), 1.0)
    assert g.nodes == ["A", "B"] and g.edges == [("A", "B", 1.0)]
    with pytest.raises(ValueError):
        threshold_graph(CorrMatrix(["A", "B", "C"], v), 1.01)


def test_threshold_uses_absolute_value_and_drops_isolated():
    v = np.array([[1.0, -0.95, 0.1], [-0.95, 1.0, 0.2], [0.1, 0.2, 1.0]])
    g = threshold_graph(CorrMatrix(["A", "B", "C"], v), 0.9)
    assert g.nodes == ["A", "B"]
    assert g.edges == [("A", "B", -0.95)]
    assert all(abs(w) >= 0.9 for _, _, w in g.edges)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), lo=st.floats(0, 1), hi=st.floats(0, 1))
def test_threshold_edges_monotone(seed, lo, hi):
    lo, hi = sorted((lo, hi))
    c = random_corr(8, 12, np.random.default_rng(seed))
    e_lo = {(s, t) for s, t, _ in threshold_graph(c, lo).edges}
    e_hi = {(s, t) for s, t, _ in threshold_graph(c, hi).edges}
    assert e_hi <= e_lo


# -- degree ------------------------------------------------------------------


def test_degree_small_graphs():
    tri = graph_from_edges([("a", "b"), ("b", "c"), ("a", "c")])
    assert degree_sequence(tri) == {"a": 2, "b": 2, "c": 2}
    star = graph_from_edges([("c", x) for x in "pqrs"])
    assert degree_sequence(star) == {"c": 4, "p": 1, "q": 1, "r": 1, "s": 1}


def test_degree_matches_row_sums(rng):
    g = random_graph(20, 0.3, rng, connected=False)
    rows = (g.adjacency() > 0).sum(axis=1)
    assert [degree_sequence(g)[t] for t in g.nodes] == rows.tolist()


# -- eigenvector centrality --------------------------------------------------


def test_centrality_complete_graph():
    k4 = graph_from_edges(list(itertools.combinations("abcd", 2)))
    for v in eigenvector_centrality(k4).values():
        assert v == pytest.approx(0.5, abs=1e-10)


def test_centrality_path_middle_largest():
    x = eigenvector_centrality(graph_from_edges([("A", "B"), ("B", "C")]))
    assert x["B"] > x["A"] and x["B"] > x["C"]


def test_centrality_matches_dense_eigensolver(rng):
    g = random_graph(15, 0.35, rng)
    got = np.array([eigenvector_centrality(g)[t] for t in g.nodes])
    vals, vecs = np.linalg.eigh(g.adjacency())
    ref = np.abs(vecs[:, np.argmax(vals)])
    assert np.abs(got - ref).max() < 1e-8
    assert np.linalg.norm(got) == pytest.approx(1.0, abs=1e-12)


def test_centrality_scale_invariant(rng):
    g = random_graph(12, 0.4, rng)
    scaled = StockGraph(g.nodes, [(s, t, 7.5 * w) for s, t, w in g.edges])
    a, b = eigenvector_centrality(g), eigenvector_centrality(scaled)
    assert max(abs(a[t] - b[t]) for t in g.nodes) < 1e-8


def test_centrality_iteration_limit_carries_residual(rng):
    g = random_graph(15, 0.3, rng)
    with pytest.raises(ConvergenceError) as err:
        eigenvector_centrality(g, max_iter=2)
    assert err.value.residual > 0


# -- pagerank ----------------------------------------------------------------


def test_pagerank_symmetric_cases():
    k4 = graph_from_edges(list(itertools.combinations("abcd", 2)))
    assert all(v == pytest.approx(0.25, abs=1e-12) for v in pagerank(k4).values())
    two = graph_from_edges([("a", "b"), ("c", "d")])
    assert all(v == pytest.approx(0.25, abs=1e-12) for v in pagerank(two).values())


def test_pagerank_matches_linear_solve(rng):
    g = random_graph(15, 0.3, rng)
    a = g.adjacency()
    p = a / a.sum(axis=1, keepdims=True)
    n, d = len(g.nodes), 0.85
    ref = np.linalg.solve(np.eye(n) - d * p.T, np.full(n, (1 - d) / n))
    got = pagerank(g, damping=d)
    assert max(abs(got[t] - r) for t, r in zip(g.nodes, ref)) < 1e-8
    assert sum(got.values()) == pytest.approx(1.0, abs=1e-9)


def test_pagerank_iteration_limit(rng):
    with pytest.raises(ConvergenceError):
        pagerank(random_graph(10, 0.3, rng), max_iter=1)


# -- clustering --------------------------------------------------------------


def brute_force_clustering(g, mode):
    a = g.adjacency()
    wmax = a.max()
    out = {}
    for i, t in enumerate(g.nodes):
        nb = [j for j in range(len(g.nodes)) if a[i, j] > 0]
        k = len(nb)
        if k < 2:
            out[t] = 0.0
            continue
        total = 0.0
        for j, m in itertools.combinations(nb, 2):
            if a[j, m] > 0:
                if mode == "binary":
                    total += 1.0
                else:
                    total += (a[i, j] * a[j, m] * a[m, i] / wmax**3) ** (1 / 3)
        out[t] = 2 * total / (k * (k - 1))
    return out


def test_clustering_full_weight_triangle():
    tri = graph_from_edges([("a", "b"), ("b", "c"), ("a", "c")], weight=0.95)
    for mode in ("binary", "geometric"):
        assert all(v == pytest.approx(1.0, abs=1e-14) for v in local_clustering(tri, mode).values())


def test_clustering_star_is_zero():
    star = graph_from_edges([("c", x) for x in "pqrs"])
    for mode in ("binary", "geometric"):
        assert all(v == 0 for v in local_clustering(star, mode).values())


@pytest.mark.parametrize("mode", ["binary", "geometric"])
def test_clustering_matches_triangle_enumeration(rng, mode):
    g = random_graph(12, 0.45, rng)
    got = local_clustering(g, mode)
    ref = brute_force_clustering(g, mode)
    assert max(abs(got[t] - ref[t]) for t in g.nodes) < 1e-12


def test_clustering_matches_networkx_weighted(rng):
    g = random_graph(12, 0.5, rng)
    G = nx.Graph()
    G.add_weighted_edges_from(g.edges)
    ref = nx.clustering(G, weight="weight")
    got = local_clustering(g, "geometric")
    assert max(abs(got[t] - ref[t]) for t in g.nodes) < 1e-12


# -- louvain and modularity --------------------------------------------------


def two_triangles():
    return graph_from_edges([("a", "b"), ("b", "c"), ("a", "c"), ("x", "y"), ("y", "z"), ("x", "z")])


def test_modularity_definition_cases(rng):
    g = two_triangles()
    assert modularity(g, dict.fromkeys(g.nodes, 0)) == pytest.approx(0.0, abs=1e-15)
    split = {t: int(t in "xyz") for t in g.nodes}
    assert modularity(g, split) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(KeyError):
        modularity(g, {"a": 0})


def test_modularity_matches_networkx(rng):
    g = random_graph(16, 0.3, rng)
    labels = {t: int(rng.integers(3)) for t in g.nodes}
    G = nx.Graph()
    G.add_weighted_edges_from(g.edges)
    groups = [{t for t in g.nodes if labels[t] == c} for c in set(labels.values())]
    assert modularity(g, labels) == pytest.approx(nx.community.modularity(G, groups, weight="weight"), abs=1e-12)


def test_louvain_disjoint_triangles():
    g = two_triangles()
    comm = louvain_communities(g, seed=3)
    assert len(set(comm.values())) == 2
    assert comm["a"] == comm["b"] == comm["c"] != comm["x"] == comm["y"] == comm["z"]
    assert sorted(set(comm.values())) == [0, 1]


def test_louvain_single_edge_not_worse_than_singletons():
    g = graph_from_edges([("a", "b")])
    comm = louvain_communities(g, seed=0)
    assert modularity(g, comm) >= modularity(g, {"a": 0, "b": 1})


def planted_graph(seed, block=10, p_in=0.9, p_out=0.05):
    r = np.random.default_rng(seed)
    nodes = [f"v{i:02d}" for i in range(2 * block)]
    edges = []
    for i, j in itertools.combinations(range(2 * block), 2):
        same = (i < block) == (j < block)
        if r.random() < (p_in if same else p_out):
            edges.append((nodes[i], nodes[j], 1.0))
    return StockGraph(nodes, edges)


def test_louvain_planted_partition():
    exact = 0
    for seed in range(20):
        g = planted_graph(seed)
        comm = louvain_communities(g, seed=seed)
        first = {comm[t] for t in g.nodes[:10]}
        second = {comm[t] for t in g.nodes[10:]}
        exact += len(first) == 1 and len(second) == 1 and first != second
    assert exact >= 18


def test_louvain_beats_random_and_singletons(rng):
    for _ in range(5):
        g = random_graph(25, 0.2, rng)
        comm = louvain_communities(g, seed=1)
        q = modularity(g, comm)
        assert q >= modularity(g, {t: i for i, t in enumerate(g.nodes)})
        assert q >= modularity(g, {t: int(rng.integers(4)) for t in g.nodes})


def test_louvain_deterministic_given_seed(rng):
    g = random_graph(30, 0.15, rng)
    assert louvain_communities(g, seed=9) == louvain_communities(g, seed=9)


def test_louvain_quality_close_to_networkx(rng):
    g = random_graph(40, 0.12, rng)
    G = nx.Graph()
    G.add_weighted_edges_from(g.edges)
    ref = nx.community.modularity(G, nx.community.louvain_communities(G, weight="weight", seed=0))
    assert modularity(g, louvain_communities(g, seed=0)) >= ref - 0.03


# -- combined ----------------------------------------------------------------


def test_analyze_network_consistency(rng):
    x = rng.standard_normal((200, 1)) + 0.4 * rng.standard_normal((200, 20))
    corr = correlation_matrix(returns_panel(x))
    net = analyze_network(corr, rho_c=0.8, seed=0)
    assert set(net.stats) == set(net.graph.nodes)
    eig = np.array(list(net.column("eigencentrality").values()))
    assert np.linalg.norm(eig) == pytest.approx(1.0, abs=1e-12)
    assert sum(net.column("pagerank").values()) == pytest.approx(1.0, abs=1e-9)
    assert all(0 <= v <= 1 for v in net.column("clustering").values())


def test_analyze_network_empty_graph(rng):
    corr = correlation_matrix(returns_panel(rng.standard_normal((50, 5))))
    net = analyze_network(corr, rho_c=0.99)
    assert net.graph.n_nodes == 0 and net.stats == {}
