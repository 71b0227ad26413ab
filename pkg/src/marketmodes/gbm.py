"""Correlated geometric Brownian motion ensembles.

Each stock's Gaussian increments mix a private stream with a shared channel
stream, ``eps = eps_own * (1 - c_eff) + c_eff * eps_shared``.  Stocks that
read the same channel seed see the same shared numbers.  Three channel
families are used:

* ``L`` -- one shared stream per Louvain community, strength = clustering,
* ``M`` -- a single market stream, strength = signed correlation to the
  closest market stock,
* ``N`` -- no shared stream at all.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .corrnet import correlation_matrix
from .market_data import ReturnPanel

CHANNELS = ("L", "M", "N")
COMMUNITY_SEED_OFFSET = 10**6
MARKET_SEED = 4376
SHARED_NAMESPACE = "shared"
DT = 1.0


@dataclass(frozen=True)
class CorrChannelConfig:
    c_eff: float
    seed: int = 0

    def __post_init__(self):
        if not abs(self.c_eff) <= 1.0:
            raise ValueError(f"|c_eff| must be <= 1, got {self.c_eff}")


@dataclass(frozen=True)
class BlendWeights:
    w_L: float = 0.0
    w_M: float = 0.0
    w_N: float = 0.0

    def __post_init__(self):
        ws = self.as_tuple()
        if min(ws) < 0:
            raise ValueError(f"blend weights must be non-negative, got {ws}")
        if abs(sum(ws) - 1.0) > 1e-12:
            raise ValueError(f"blend weights must sum to 1, got {sum(ws)!r}")

    def as_tuple(self):
        return (self.w_L, self.w_M, self.w_N)

    def as_dict(self):
        return dict(zip(CHANNELS, self.as_tuple()))

    @property
    def active(self):
        return tuple(c for c, w in self.as_dict().items() if w > 0)

    @classmethod
    def from_mapping(cls, weights):
        """Build from ``{"L": .., "M": .., "N": ..}``; weights are normalised."""
        unknown = set(weights) - set(CHANNELS)
        if unknown:
            raise ValueError(f"unknown channels {sorted(unknown)}")
        total = float(sum(weights.values()))
        if not total > 0:
            raise ValueError("at least one blend weight must be positive")
        vals = [float(weights.get(c, 0.0)) / total for c in CHANNELS]
        # push the rounding residue onto the largest weight
        big = int(np.argmax(vals))
        vals[big] = 1.0 - sum(v for i, v in enumerate(vals) if i != big)
        return cls(*vals)


def own_seed(master_seed, ticker):
    return rng.derive_seed(master_seed, ticker)


def correlated_increments(t_steps, channel, own, master_seed=0, namespace="own", renormalize=False):
    """Blended standard-normal increments for one stock."""
    eps = rng.normals(master_seed, namespace, own, t_steps)
    c = float(channel.c_eff)
    if c != 0.0:
        shared = rng.normals(master_seed, SHARED_NAMESPACE, channel.seed, t_steps)
        eps = eps * (1.0 - c) + c * shared
        if renormalize:
            eps = eps / math.sqrt((1.0 - c) ** 2 + c**2)
    return eps


def gbm_path(params, eps, dt=DT):
    """``s0 * exp((mu - sigma^2/2) t + sigma W)`` with ``W = sqrt(dt) * cumsum(eps)``."""
    t = np.arange(len(eps)) * dt
    w = np.cumsum(eps) * math.sqrt(dt)
    return params.s0 * np.exp((params.mu - 0.5 * params.sigma**2) * t + params.sigma * w)


def simulate_gbm_corr(params, t_steps, channel, own, master_seed=0, namespace="own", renormalize=False):
    """One GBM price path of ``t_steps`` points driven by a correlation channel."""
    if t_steps < 1:
        raise ValueError("t_steps must be >= 1")
    eps = correlated_increments(t_steps, channel, own, master_seed, namespace, renormalize)
    return gbm_path(params, eps)


def noise_channels(tickers):
    return [CorrChannelConfig(0.0, 0) for _ in tickers]


def community_channels(tickers, communities, clustering):
    """Channel per stock: seed from its community label, strength = clustering."""
    out = []
    for t in tickers:
        if t not in communities or t not in clustering:
            raise KeyError(f"no community label / clustering value for {t}")
        out.append(CorrChannelConfig(float(clustering[t]), int(communities[t]) + COMMUNITY_SEED_OFFSET))
    return out


def closest_market_stock(corr, ticker, market_tickers):
    """Market ticker with the largest ``|C|`` to ``ticker``; ties go to the smaller ticker."""
    if not market_tickers:
        raise ValueError("market_tickers is empty")
    i = corr.index(ticker)
    best, best_abs = None, -1.0
    for m in sorted(market_tickers, key=str):
        v = 1.0 if m == ticker else abs(corr.values[i, corr.index(m)])
        if v > best_abs:
            best, best_abs = m, v
    return best


def market_channels(corr, tickers, market_tickers):
    out = []
    for t in tickers:
        m = closest_market_stock(corr, t, market_tickers)
        c = 1.0 if m == t else float(corr.values[corr.index(t), corr.index(m)])
        out.append(CorrChannelConfig(c, MARKET_SEED))
    return out


def channel_walks(params, tickers, t_steps, channels, master_seed, name, renormalize=False):
    """Price paths (``t_steps x N``) for one channel family."""
    if not (len(params) == len(tickers) == len(channels)):
        raise ValueError("params, tickers and channels must have equal length")
    cols = [
        simulate_gbm_corr(p, t_steps, ch, own_seed(master_seed, t), master_seed, f"own/{name}", renormalize)
        for p, t, ch in zip(params, tickers, channels)
    ]
    return np.column_stack(cols) if cols else np.zeros((t_steps, 0))


def community_walks(params, tickers, communities, clustering, t_steps, master_seed=0):
    return channel_walks(params, tickers, t_steps, community_channels(tickers, communities, clustering), master_seed, "L")


def market_walks(params, tickers, corr, market_tickers, t_steps, master_seed=0):
    return channel_walks(params, tickers, t_steps, market_channels(corr, tickers, market_tickers), master_seed, "M")


def noise_walks(params, tickers, t_steps, master_seed=0):
    return channel_walks(params, tickers, t_steps, noise_channels(tickers), master_seed, "N")


def blend_walks(components):
    """Pointwise weighted average of price paths; weights are normalised."""
    components = list(components)
    if not components:
        raise ValueError("no components to blend")
    weights = np.array([float(w) for w, _ in components])
    if (weights < 0).any() or not weights.sum() > 0:
        raise ValueError("weights must be non-negative and not all zero")
    paths = [np.asarray(p, dtype=float) for _, p in components]
    shape = paths[0].shape
    for p in paths[1:]:
        if p.shape != shape:
            raise ValueError(f"path shape mismatch: {p.shape} vs {shape}")
    weights = weights / weights.sum()
    out = np.zeros(shape)
    for w, p in zip(weights, paths):
        if w > 0:
            out += w * p
    return out


@dataclass(frozen=True)
class WalkEnsemble:
    tickers: list
    paths: np.ndarray
    channels: dict
    weights: BlendWeights
    master_seed: int
    t_steps: int = field(default=0)


def build_ensemble(params, tickers, t_steps, channels, weights, master_seed=0, renormalize=False):
    """Generate the active channel walks and blend them.

    ``channels`` maps channel name (``L``/``M``/``N``) to a per-stock list of
    :class:`CorrChannelConfig`; only channels with positive weight are drawn.
    """
    parts = []
    for name, w in weights.as_dict().items():
        if w <= 0:
            continue
        chans = channels.get(name)
        if chans is None:
            chans = noise_channels(tickers) if name == "N" else None
        if chans is None:
            raise KeyError(f"channel {name} has weight {w} but no configuration")
        parts.append((w, channel_walks(params, tickers, t_steps, chans, master_seed, name, renormalize)))
    return WalkEnsemble(list(tickers), blend_walks(parts), dict(channels), weights, master_seed, t_steps)


def path_correlation(paths, tickers):
    """Correlation of the log-returns of a ``T x N`` price array."""
    paths = np.asarray(paths, dtype=float)
    if paths.shape[0] < 3:
        raise ValueError("need at least 3 steps to correlate returns")
    lr = np.diff(np.log(paths), axis=0)
    return correlation_matrix(ReturnPanel(list(tickers), list(range(lr.shape[0])), lr))


def simulated_correlation(ensemble):
    return path_correlation(ensemble.paths, ensemble.tickers)
