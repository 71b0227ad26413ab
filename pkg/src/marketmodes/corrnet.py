"""Correlation matrix, threshold network and node statistics."""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

EIG_TOL = 1e-10
EIG_MAX_ITER = 10000
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 10000


class ConvergenceError(RuntimeError):
    """Power iteration hit its iteration limit."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class ZeroVarianceError(ValueError):
    pass


@dataclass(frozen=True)
class CorrMatrix:
    tickers: list
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.tickers), len(self.tickers)):
            raise ValueError(f"matrix shape {v.shape} does not match {len(self.tickers)} tickers")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return len(self.tickers)

    def offdiagonal(self):
        """Upper-triangle entries, diagonal excluded."""
        iu = np.triu_indices(self.n, k=1)
        return self.values[iu]

    def index(self, ticker):
        return self.tickers.index(ticker)


def correlation_matrix(returns):
    """Pearson correlation of the return columns of a :class:`ReturnPanel`.

    Moments are taken over the full window; the diagonal is set to exactly 1
    and the result is symmetrised.
    """
    r = np.asarray(returns.returns, dtype=float)
    centered = r - r.mean(axis=0)
    std = np.sqrt(np.mean(centered**2, axis=0))
    scale = np.abs(r).max(axis=0) if r.size else np.zeros(r.shape[1])
    for i, (s, sc) in enumerate(zip(std, scale)):
        if not s > 1e-14 * max(sc, 1e-300):
            raise ZeroVarianceError(f"zero-variance return series for {returns.tickers[i]}")
    z = centered / std
    c = (z.T @ z) / r.shape[0]
    c = 0.5 * (c + c.T)
    np.clip(c, -1.0, 1.0, out=c)
    np.fill_diagonal(c, 1.0)
    return CorrMatrix(list(returns.tickers), c)


@dataclass(frozen=True)
class StockGraph:
    """Undirected weighted graph; each edge is ``(source, target, weight)``."""

    nodes: list
    edges: list
    rho_c: float = 0.0

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edges)

    @cached_property
    def _pos(self):
        return {t: i for i, t in enumerate(self.nodes)}

    def adjacency(self, absolute=True):
        """Dense adjacency in node order, ``|weight|`` by default."""
        n = self.n_nodes
        a = np.zeros((n, n))
        for s, t, w in self.edges:
            i, j = self._pos[s], self._pos[t]
            a[i, j] = a[j, i] = abs(w) if absolute else w
        return a

    def binary_adjacency(self):
        return (self.adjacency() != 0).astype(float) if self.edges else np.zeros((self.n_nodes,) * 2)


def threshold_graph(corr, rho_c):
    """Keep the off-diagonal pairs with ``|C_ij| >= rho_c``; drop isolated tickers."""
    if not 0.0 <= rho_c <= 1.0:
        raise ValueError(f"rho_c must lie in [0, 1], got {rho_c}")
    c = corr.values
    iu, ju = np.triu_indices(corr.n, k=1)
    keep = np.abs(c[iu, ju]) >= rho_c
    iu, ju = iu[keep], ju[keep]
    present = np.zeros(corr.n, dtype=bool)
    present[iu] = present[ju] = True
    nodes = [t for t, p in zip(corr.tickers, present) if p]
    edges = [(corr.tickers[i], corr.tickers[j], float(c[i, j])) for i, j in zip(iu, ju)]
    return StockGraph(nodes, edges, float(rho_c))


def degree_sequence(g):
    deg = dict.fromkeys(g.nodes, 0)
    for s, t, _ in g.edges:
        deg[s] += 1
        deg[t] += 1
    return deg


def eigenvector_centrality(g, tol=EIG_TOL, max_iter=EIG_MAX_ITER):
    """Principal eigenvector of the ``|weight|`` adjacency by power iteration.

    Iterates on ``A + I`` (same eigenvectors, no oscillation on bipartite
    graphs).  The result is non-negative with unit Euclidean norm.
    """
    if g.n_nodes == 0:
        raise ValueError("graph has no nodes")
    a = g.adjacency()
    n = g.n_nodes
    x = np.full(n, 1.0 / math.sqrt(n))
    residual = math.inf
    for _ in range(max_iter):
        y = a @ x + x
        y /= np.linalg.norm(y)
        residual = np.linalg.norm(y - x)
        x = y
        if residual < tol:
            return dict(zip(g.nodes, x.tolist()))
    raise ConvergenceError("eigenvector centrality did not converge", residual)


def transition_matrix(a):
    """Row-stochastic matrix of a weighted adjacency; dangling rows stay zero."""
    strength = a.sum(axis=1)
    p = np.zeros_like(a)
    nz = strength > 0
    p[nz] = a[nz] / strength[nz, None]
    return p, ~nz


def pagerank(g, damping=0.85, tol=PAGERANK_TOL, max_iter=PAGERANK_MAX_ITER):
    """Weighted PageRank; dangling nodes spread their mass uniformly."""
    if g.n_nodes == 0:
        raise ValueError("graph has no nodes")
    n = g.n_nodes
    p, dangling = transition_matrix(g.adjacency())
    x = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iter):
        y = damping * (p.T @ x + x[dangling].sum() / n) + (1.0 - damping) / n
        y /= y.sum()
        residual = np.abs(y - x).sum()
        x = y
        if residual < tol:
            return dict(zip(g.nodes, x.tolist()))
    raise ConvergenceError("pagerank did not converge", residual)


def local_clustering(g, mode="geometric"):
    """Local clustering coefficient per node.

    ``mode="binary"`` counts closed triangles.  ``mode="geometric"`` weights
    each triangle by the geometric mean of its three normalised edge weights
    ``|w| / max|w|``.  Both divide by ``k(k-1)`` over ordered neighbour pairs,
    so a full-weight triangle scores 1.  Nodes of degree below 2 score 0.
    """
    if mode not in ("binary", "geometric"):
        raise ValueError(f"unknown clustering mode {mode!r}")
    if g.n_nodes == 0:
        return {}
    a = g.adjacency()
    k = (a > 0).sum(axis=1)
    if mode == "binary":
        b = (a > 0).astype(float)
    else:
        wmax = a.max()
        b = np.cbrt(a / wmax) if wmax > 0 else a
    closed = np.einsum("ij,jk,ki->i", b, b, b)
    denom = k * (k - 1)
    out = np.where(denom > 0, closed / np.maximum(denom, 1), 0.0)
    return dict(zip(g.nodes, out.tolist()))


def modularity(g, partition, resolution=1.0):
    """Weighted Newman modularity of ``partition`` (ticker -> label)."""
    missing = [t for t in g.nodes if t not in partition]
    if missing:
        raise KeyError(f"partition is missing nodes: {missing[:5]}")
    a = g.adjacency()
    labels = np.array([partition[t] for t in g.nodes])
    return _modularity(a, labels, resolution)


def _modularity(a, labels, resolution=1.0):
    two_m = a.sum()
    if two_m == 0:
        return 0.0
    _, comm = np.unique(labels, return_inverse=True)
    k = a.sum(axis=1)
    inside = 0.0
    for c in range(comm.max() + 1):
        members = comm == c
        inside += a[np.ix_(members, members)].sum() / two_m
        inside -= resolution * (k[members].sum() / two_m) ** 2
    return float(inside)


def _louvain_level(a, rng, resolution):
    """Local-move phase on a (possibly aggregated) graph.

    Returns community ids per node and whether any node moved.
    """
    n = a.shape[0]
    two_m = a.sum()
    k = a.sum(axis=1)
    self_loops = np.diag(a).copy()
    comm = np.arange(n)
    tot = k.copy()
    moved_any = False
    order = rng.permutation(n)
    while True:
        moved = False
        for i in order:
            old = comm[i]
            links = np.bincount(comm, weights=a[i], minlength=n)
            links[old] -= self_loops[i]
            tot[old] -= k[i]
            # gain of inserting i into community c, up to a common factor
            best, best_gain = old, links[old] - resolution * tot[old] * k[i] / two_m
            neighbours = np.flatnonzero(a[i])
            for c in np.unique(comm[neighbours]):
                if c == old:
                    continue
                gain = links[c] - resolution * tot[c] * k[i] / two_m
                if gain > best_gain + 1e-12 * max(1.0, abs(best_gain)):
                    best, best_gain = c, gain
            comm[i] = best
            tot[best] += k[i]
            if best != old:
                moved = True
        if not moved:
            break
        moved_any = True
    return comm, moved_any


def louvain_communities(g, seed=0, resolution=1.0):
    """Louvain modularity maximisation on ``|weight|`` edges.

    Node visit order at each level is a permutation drawn from ``seed``;
    a node joins the neighbouring community with the largest gain, ties
    going to the first candidate.  Labels are ``0..k-1`` numbered by first
    appearance in node order.
    """
    n = g.n_nodes
    if n == 0:
        return {}
    rng = np.random.default_rng(seed)
    a = g.adjacency()
    membership = np.arange(n)
    if a.sum() > 0:
        level = a
        while True:
            comm, moved = _louvain_level(level, rng, resolution)
            if not moved:
                break
            _, comm = np.unique(comm, return_inverse=True)
            membership = comm[membership]
            s = np.zeros((level.shape[0], comm.max() + 1))
            s[np.arange(level.shape[0]), comm] = 1.0
            level = s.T @ level @ s
            if level.shape[0] == 1:
                break
    relabel = {}
    labels = [relabel.setdefault(c, len(relabel)) for c in membership.tolist()]
    return dict(zip(g.nodes, labels))


@dataclass(frozen=True)
class NodeStats:
    degree: int
    eigencentrality: float
    pagerank: float
    clustering: float
    community: int


@dataclass(frozen=True)
class NetworkAnalysis:
    graph: StockGraph
    stats: dict

    def column(self, name):
        return {t: getattr(s, name) for t, s in self.stats.items()}

    @property
    def communities(self):
        return self.column("community")


def analyze_network(corr, rho_c=0.9, seed=0, damping=0.85):
    """Threshold graph plus every per-node statistic."""
    g = threshold_graph(corr, rho_c)
    if g.n_nodes == 0:
        return NetworkAnalysis(g, {})
    deg = degree_sequence(g)
    eig = eigenvector_centrality(g)
    pr = pagerank(g, damping=damping)
    clus = local_clustering(g, mode="geometric")
    comm = louvain_communities(g, seed=seed)
    stats = {
        t: NodeStats(deg[t], eig[t], pr[t], clus[t], comm[t]) for t in g.nodes
    }
    return NetworkAnalysis(g, stats)
