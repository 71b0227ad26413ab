import numpy as np
import pytest

from marketmodes.corrnet import StockGraph
from marketmodes.market_data import PricePanel
from marketmodes.synthetic import business_days


def make_panel(prices, tickers=None, sectors=None):
    prices = np.asarray(prices, dtype=float)
    tickers = tickers or [f"T{i}" for i in range(prices.shape[1])]
    return PricePanel(tickers, business_days(prices.shape[0]), prices, sectors or {})


def random_graph(n, p, rng, weights=(0.1, 1.0), connected=True):
    """Erdos-Renyi graph with uniform weights; optionally chained to be connected."""
    nodes = [f"n{i:02d}" for i in range(n)]
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges[(i, j)] = rng.uniform(*weights)
    if connected:
        for i in range(n - 1):
            edges.setdefault((i, i + 1), rng.uniform(*weights))
    return StockGraph(nodes, [(nodes[i], nodes[j], w) for (i, j), w in sorted(edges.items())])


def graph_from_edges(pairs, weight=1.0):
    nodes = []
    for a, b in pairs:
        for x in (a, b):
            if x not in nodes:
                nodes.append(x)
    return StockGraph(nodes, [(a, b, weight) for a, b in pairs])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_csv(tmp_path):
    text = "date,AAA,BBB,CCC\n2024-01-02,10,20,30\n2024-01-03,11,19,31\n2024-01-04,12,21,29\n2024-01-05,11.5,22,30\n"
    path = tmp_path / "panel.csv"
    path.write_text(text)
    return path


def simplex_grid_best_sharpe(mu, cov, r_f=0.0, n_points=1_000_000):
    """Best Sharpe over a regular grid on the 3-asset simplex (about ``n_points`` nodes)."""
    m = int(np.floor((np.sqrt(8 * n_points + 1) - 3) / 2))
    i, j = np.triu_indices(m + 1)
    # (i, j - i, m - j) enumerates every composition of m into three parts
    w = np.stack([i, j - i, m - j], axis=1) / m
    ret = w @ mu - r_f
    var = np.einsum("ki,ij,kj->k", w, cov, w)
    return float(np.max(ret / np.sqrt(var)))


# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number}: {passed} {detail}")
