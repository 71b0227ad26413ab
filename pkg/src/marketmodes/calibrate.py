"""Blend-weight calibration by Wasserstein distance on correlation entries."""

import itertools
from dataclasses import dataclass

import numpy as np

from .gbm import BlendWeights, blend_walks, channel_walks, noise_channels, path_correlation


class CalibrationError(RuntimeError):
    pass


def wasserstein_1d(a, b):
    """Wasserstein-1 distance between two empirical distributions on the line.

    Equal sample sizes reduce to the mean absolute difference of the sorted
    samples; otherwise the CDF difference is integrated between the merged
    sample points, which equals the quantile-function integral.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d needs two non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    merged = np.sort(np.concatenate([a, b]))
    cdf_a = np.searchsorted(a, merged[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, merged[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * np.diff(merged)))


def offdiagonal_samples(x):
    """Correlation-entry samples from a matrix-like object or a plain array."""
    if hasattr(x, "offdiagonal"):
        return x.offdiagonal()
    return np.asarray(x, dtype=float).ravel()


@dataclass(frozen=True)
class GridSpec:
    step: float
    active: tuple
    refine: bool = True
    bounds: tuple = (0.0, 1.0)

    @property
    def divisions(self):
        return int(round((self.bounds[1] - self.bounds[0]) / self.step))


@dataclass(frozen=True)
class FitResult:
    weights: BlendWeights
    distance: float
    evaluations: int
    grid_spec: GridSpec
    ensemble_seeds: tuple

    def active_weights(self):
        d = self.weights.as_dict()
        return {c: d[c] for c in self.grid_spec.active}


def simplex_points(k, total):
    """All non-negative integer k-tuples summing to ``total``, lexicographic."""
    if k == 1:
        return [(total,)]
    pts = []
    for cut in itertools.combinations(range(total + k - 1), k - 1):
        bounds = (-1, *cut, total + k - 1)
        pts.append(tuple(bounds[i + 1] - bounds[i] - 1 for i in range(k)))
    return sorted(pts)


def fit_weights(target, simulator, active=("L", "M"), step=0.02, master_seeds=(0, 1, 2), refine=True):
    """Grid search for the blend weights whose simulated entries best match ``target``.

    ``simulator(weights, master_seed)`` returns a correlation-like object (or
    an array of entries).  The objective is the Wasserstein-1 distance to the
    target off-diagonal entries, averaged over ``master_seeds``.  The whole
    simplex of ``active`` channels is scanned at ``step``; exact ties go to the
    lexicographically smallest weight vector.  With ``refine`` one extra pass
    at half the step is made around the best point.
    """
    active = tuple(active)
    if not active or len(set(active)) != len(active):
        raise ValueError(f"bad active channel set {active}")
    seeds = tuple(int(s) for s in master_seeds)
    if not seeds:
        raise ValueError("at least one master seed is required")
    spec = GridSpec(float(step), active, refine)
    div = spec.divisions
    if div < 2 or abs(div * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} must divide 1 into at least 2 parts")
    target = offdiagonal_samples(target)
    if len(active) == 1:
        spec = GridSpec(float(step), active, False)

    # weights are kept as integer counts of half-steps so ties compare exactly
    scale = 2 * div
    cache = {}

    def objective(counts):
        if counts not in cache:
            vec = [c / scale for c in counts]
            weights = BlendWeights.from_mapping(dict(zip(active, vec)))
            try:
                ds = [wasserstein_1d(target, offdiagonal_samples(simulator(weights, s))) for s in seeds]
            except Exception as exc:
                raise CalibrationError(f"simulator failed at weights {dict(zip(active, vec))}: {exc}") from exc
            cache[counts] = float(np.mean(ds))
        return cache[counts]

    grid = [tuple(2 * c for c in p) for p in simplex_points(len(active), div)]
    best = min((objective(p), p) for p in grid)
    if refine and len(active) > 1:
        _, centre = best
        around = []
        for i, j in itertools.permutations(range(len(active)), 2):
            p = list(centre)
            p[i] += 1
            p[j] -= 1
            if min(p) >= 0:
                around.append(tuple(p))
        best = min([best] + [(objective(p), p) for p in around])

    distance, counts = best
    weights = BlendWeights.from_mapping({c: n / scale for c, n in zip(active, counts)})
    return FitResult(weights, distance, len(cache), spec, seeds)


class BlendSimulator:
    """Simulated correlation for a weight vector, reusing channel walks per seed.

    The channel walks do not depend on the blend weights, so they are drawn
    once per ``(channel, master_seed)`` and only re-blended afterwards.
    """

    def __init__(self, params, tickers, t_steps, channels, renormalize=False):
        self.params = list(params)
        self.tickers = list(tickers)
        self.t_steps = int(t_steps)
        self.channels = dict(channels)
        self.channels.setdefault("N", noise_channels(self.tickers))
        self.renormalize = renormalize
        self._walks = {}

    def walks(self, name, master_seed):
        key = (name, int(master_seed))
        if key not in self._walks:
            if name not in self.channels:
                raise KeyError(f"no configuration for channel {name}")
            self._walks[key] = channel_walks(
                self.params, self.tickers, self.t_steps, self.channels[name], int(master_seed), name, self.renormalize
            )
        return self._walks[key]

    def paths(self, weights, master_seed):
        parts = [(w, self.walks(c, master_seed)) for c, w in weights.as_dict().items() if w > 0]
        return blend_walks(parts)

    def __call__(self, weights, master_seed):
        return path_correlation(self.paths(weights, master_seed), self.tickers)
