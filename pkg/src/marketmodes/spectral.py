"""Eigen-analysis of correlation matrices and the market/noise split."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .corrnet import CorrMatrix

#: Default share of the node ranking treated as "top" when picking influential stocks.
TOP_FRACTION = 0.03


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralSplit:
    """Eigenvalues in descending order with matching eigenvector columns."""

    tickers: list
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    market_indices: tuple = ()
    market_tickers: tuple = ()

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def n_market(self):
        return len(self.market_indices)

    @property
    def noise_indices(self):
        chosen = set(self.market_indices)
        return tuple(i for i in range(self.n) if i not in chosen)


@dataclass(frozen=True)
class MpParams:
    q: float
    sigma2: float = 1.0
    lambda_minus: float = field(init=False)
    lambda_plus: float = field(init=False)

    def __post_init__(self):
        lo, hi = mp_edges(self.q, self.sigma2)
        object.__setattr__(self, "lambda_minus", lo)
        object.__setattr__(self, "lambda_plus", hi)

    @classmethod
    def for_panel(cls, n_observations, n_stocks, sigma2=1.0):
        return cls(n_observations / n_stocks, sigma2)


def eigendecompose(corr, sym_tol=1e-10):
    values = corr.values if isinstance(corr, CorrMatrix) else np.asarray(corr, dtype=float)
    tickers = corr.tickers if isinstance(corr, CorrMatrix) else list(range(values.shape[0]))
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise SpectralError(f"matrix must be square, got shape {values.shape}")
    asym = np.abs(values - values.T).max() if values.size else 0.0
    if asym > sym_tol:
        raise SpectralError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    w, v = np.linalg.eigh(values)
    order = np.argsort(w, kind="stable")[::-1]
    w, v = w[order], v[:, order]
    # fix the sign of each eigenvector so the largest-magnitude entry is positive
    pivots = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivots, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return SpectralSplit(list(tickers), w, v * signs)


def mp_edges(q, sigma2=1.0):
    """Support of the Marchenko-Pastur law, ``sigma2 * (1 +- sqrt(1/q))**2``."""
    if not q > 0 or not sigma2 > 0:
        raise ValueError("q and sigma2 must be positive")
    r = math.sqrt(1.0 / q)
    return sigma2 * (1.0 - r) ** 2, sigma2 * (1.0 + r) ** 2


def mp_density(lam, params):
    """Marchenko-Pastur density, zero outside ``[lambda_minus, lambda_plus]``.

    Accepts a scalar or an array.  For ``q < 1`` the continuous part carries
    mass ``q``; the remainder sits at zero and is not represented here.
    """
    lam = np.asarray(lam, dtype=float)
    lo, hi = params.lambda_minus, params.lambda_plus
    inside = (lam > lo) & (lam < hi) & (lam > 0)
    safe = np.where(inside, lam, 1.0)
    dens = params.q / (2.0 * math.pi * params.sigma2) * np.sqrt(
        np.clip((hi - safe) * (safe - lo), 0.0, None)
    ) / safe
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def rescaled_sigma2(lambda_market, n_stocks):
    """Share of total variance left after removing the top mode: ``1 - lambda/N``."""
    if not 0 <= lambda_market <= n_stocks:
        raise ValueError(f"lambda_market must lie in [0, {n_stocks}]")
    return 1.0 - lambda_market / n_stocks


def top_ranked(scores, fraction=TOP_FRACTION):
    """The ``ceil(fraction * n)`` best tickers; ties go to the smaller ticker."""
    n_top = math.ceil(fraction * len(scores) - 1e-12)
    ranked = sorted(scores, key=lambda t: (-scores[t], str(t)))
    return ranked[:n_top]


def influential_stocks(stats, fraction=TOP_FRACTION):
    """Tickers whose eigenvector centrality and PageRank are both in the top fraction.

    ``stats`` maps ticker -> :class:`~marketmodes.corrnet.NodeStats`.  The
    result is sorted by ticker.
    """
    eig = {t: s.eigencentrality for t, s in stats.items()}
    pr = {t: s.pagerank for t, s in stats.items()}
    return sorted(set(top_ranked(eig, fraction)) & set(top_ranked(pr, fraction)), key=str)


def select_market_modes(split, stats, mp, fraction=TOP_FRACTION, check_edge=True):
    """Attach the market modes to ``split``.

    The number of modes equals the number of influential stocks; the modes are
    the largest eigenvalues.  With ``check_edge`` the smallest selected
    eigenvalue must reach the unrescaled upper Marchenko-Pastur edge of ``mp``.
    """
    chosen = influential_stocks(stats, fraction)
    if not chosen:
        raise SpectralError("no influential stocks")
    n_market = len(chosen)
    if n_market > split.n:
        raise SpectralError(f"{n_market} influential stocks but only {split.n} eigenvalues")
    smallest = float(split.eigenvalues[n_market - 1])
    if check_edge and smallest < mp.lambda_plus:
        raise SpectralError(
            f"smallest market eigenvalue {smallest:.6g} is below the "
            f"Marchenko-Pastur edge {mp.lambda_plus:.6g}"
        )
    return replace(split, market_indices=tuple(range(n_market)), market_tickers=tuple(chosen))


def mode_projection(split, indices):
    """``Q diag(lambda_S) Q^T`` keeping only the eigenvalues listed in ``indices``."""
    idx = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= split.n):
        raise IndexError("mode index out of range")
    q = split.eigenvectors[:, idx]
    return (q * split.eigenvalues[idx]) @ q.T


def market_and_noise(split):
    """Projections on the market modes and on their complement."""
    return mode_projection(split, split.market_indices), mode_projection(split, split.noise_indices)


@dataclass(frozen=True)
class RescaledCorr:
    """Normalised matrix with a mask of rows whose diagonal was usable."""

    tickers: list
    values: np.ndarray
    defined: np.ndarray

    def offdiagonal(self):
        """Upper-triangle entries between defined rows."""
        keep = np.flatnonzero(self.defined)
        sub = self.values[np.ix_(keep, keep)]
        return sub[np.triu_indices(len(keep), k=1)]


def rescale_correlation(m, tickers=None, floor=1e-12):
    """``M_ij / sqrt(M_ii M_jj)``; rows with ``M_ii <= floor`` are undefined (NaN)."""
    m = np.asarray(m, dtype=float)
    d = np.diag(m).copy()
    defined = d > floor
    scale = np.where(defined, np.sqrt(np.where(defined, d, 1.0)), np.nan)
    out = m / np.outer(scale, scale)
    out[np.flatnonzero(defined), np.flatnonzero(defined)] = 1.0
    if tickers is None:
        tickers = list(range(m.shape[0]))
    return RescaledCorr(list(tickers), out, defined)


@dataclass(frozen=True)
class EigenHistogram:
    edges: np.ndarray
    counts: np.ndarray
    curve_x: np.ndarray
    mp_curve: np.ndarray
    mp_rescaled_curve: np.ndarray


def eigenvalue_histogram(split, bins, value_range=None, mp=None, mp_rescaled=None, n_curve=200):
    """Histogram of the spectrum with Marchenko-Pastur overlay samples.

    Overlays are scaled to the histogram's count axis (density times
    ``N * bin width``) so they can be drawn on the same axes.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(split.eigenvalues, bins=bins, range=value_range)
    width = edges[1] - edges[0]
    if mp is not None or mp_rescaled is not None:
        hi = max(p.lambda_plus for p in (mp, mp_rescaled) if p is not None)
        x = np.linspace(0.0, hi * 1.05, n_curve)
    else:
        x = np.zeros(0)
    scale = split.n * width

    def overlay(p):
        return mp_density(x, p) * scale if p is not None else np.zeros_like(x)

    return EigenHistogram(edges, counts, x, overlay(mp), overlay(mp_rescaled))
