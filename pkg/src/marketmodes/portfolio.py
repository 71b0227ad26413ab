"""Max-Sharpe weights and the walk-forward rebalancing backtest."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import cvxpy as cp
import numpy as np

from . import rng
from .gbm import BlendWeights, build_ensemble
from .pipeline import simulation_inputs

log = logging.getLogger(__name__)

DEFAULT_MIN_WEIGHT = 0.0005
DEFAULT_DTS = (252, 126, 84, 63, 42, 31)


class InfeasibleError(ValueError):
    """No portfolio under the constraints has a positive excess return."""


class SolverError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


@dataclass(frozen=True)
class PortfolioWeights:
    tickers: list
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def as_dict(self):
        return dict(zip(self.tickers, self.weights.tolist()))


def portfolio_stats(weights, expected_returns, cov, r_f=0.0):
    """``(R_P, sigma_P, sharpe)``; a riskless portfolio reports an infinite Sharpe."""
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    mu = np.asarray(expected_returns, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if w.shape != mu.shape or cov.shape != (w.size, w.size):
        raise ValueError("dimension mismatch between weights, returns and covariance")
    r_p = float(w @ mu)
    var = float(w @ cov @ w)
    sigma_p = math.sqrt(max(var, 0.0))
    excess = r_p - r_f
    if sigma_p == 0.0:
        sharpe = math.copysign(math.inf, excess) if excess != 0 else 0.0
    else:
        sharpe = excess / sigma_p
    return r_p, sigma_p, sharpe


def _psd_factor(cov):
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    keep = vals > vals.max(initial=0.0) * 1e-14
    return np.sqrt(vals[keep])[:, None] * vecs[:, keep].T


def _polish(w, min_weight):
    """Snap onto ``{w >= min_weight, sum(w) = 1}`` without moving interior mass much."""
    n = w.size
    free = 1.0 - n * min_weight
    v = np.clip(w - min_weight, 0.0, None)
    if free <= 0 or v.sum() == 0:
        return np.full(n, 1.0 / n)
    return min_weight + v * (free / v.sum())


def _solve_transformed(excess, cov, min_weight):
    """Scale-variable form of the max-Sharpe problem.

    With ``y = kappa * w`` and ``z = y - min_weight * kappa``, maximising the
    Sharpe ratio is the convex problem ``min |F L z|^2`` subject to
    ``(L^T excess) . z = 1`` and ``z >= 0``, where ``L = I + c 11^T`` and
    ``c = min_weight / (1 - n min_weight)``.
    """
    n = excess.size
    c = min_weight / (1.0 - n * min_weight)
    lift = np.eye(n) + c * np.ones((n, n))
    a = lift.T @ excess
    if not (a > 0).any():
        raise InfeasibleError("no feasible portfolio beats the risk-free rate")
    f = _psd_factor(cov) @ lift
    z = cp.Variable(n, nonneg=True)
    problem = cp.Problem(cp.Minimize(cp.sum_squares(f @ z)), [a @ z == 1])
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.SolverError as exc:
        raise SolverError(f"QP solver failed: {exc}") from exc
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or z.value is None:
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise InfeasibleError("no feasible portfolio beats the risk-free rate")
        raise SolverError(f"QP solver status {problem.status}")
    y = lift @ np.clip(z.value, 0.0, None)
    if not y.sum() > 0:
        raise SolverError("QP returned an empty portfolio", {"sum": float(y.sum())})
    return y / y.sum()


def _project_shifted_simplex(x, min_weight):
    """Euclidean projection onto ``{w >= min_weight, sum(w) = 1}``."""
    n = x.size
    total = 1.0 - n * min_weight
    v = x - min_weight
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    rho = np.flatnonzero(u - css / np.arange(1, n + 1) > 0)[-1]
    theta = css[rho] / (rho + 1)
    return min_weight + np.clip(v - theta, 0.0, None)


def projected_gradient_sharpe(excess, cov, min_weight, w0=None, max_iter=20000, tol=1e-13):
    """Projected gradient ascent on the Sharpe ratio with backtracking."""
    n = excess.size
    w = _project_shifted_simplex(np.full(n, 1.0 / n) if w0 is None else np.asarray(w0, float), min_weight)

    def sharpe(x):
        s = math.sqrt(max(float(x @ cov @ x), 1e-300))
        return float(x @ excess) / s

    cur = sharpe(w)
    step = 1.0
    for _ in range(max_iter):
        sc = math.sqrt(max(float(w @ cov @ w), 1e-300))
        grad = excess / sc - (w @ excess) * (cov @ w) / sc**3
        while True:
            cand = _project_shifted_simplex(w + step * grad, min_weight)
            val = sharpe(cand)
            if val >= cur or step < 1e-20:
                break
            step *= 0.5
        moved = np.abs(cand - w).max()
        w, cur = cand, val
        step *= 2.0
        if moved < tol:
            break
    return w


def max_sharpe_weights(expected_returns, cov, r_f=0.0, min_weight=DEFAULT_MIN_WEIGHT, tickers=None, method="qp"):
    """Long-only weights maximising ``(w.R - r_f) / sqrt(w' Cov w)``.

    Constraints: ``sum(w) = 1`` and ``w >= min_weight``.  ``method="qp"``
    solves the convex reformulation and falls back to projected gradient if
    the QP solver fails; ``method="gradient"`` uses the fallback directly.
    """
    mu = np.asarray(expected_returns, dtype=float).ravel()
    cov = np.asarray(cov, dtype=float)
    n = mu.size
    tickers = list(tickers) if tickers is not None else list(range(n))
    if cov.shape != (n, n):
        raise ValueError(f"covariance shape {cov.shape} does not match {n} assets")
    if min_weight < 0 or n * min_weight > 1.0 + 1e-12:
        raise ValueError(f"min_weight {min_weight} infeasible for {n} assets")
    if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(cov)):
        raise ValueError("non-finite expected returns or covariance")
    excess = mu - r_f
    if not (excess > 0).any():
        raise InfeasibleError("no asset beats the risk-free rate")
    if n == 1:
        return PortfolioWeights(tickers, np.ones(1))
    if n * min_weight >= 1.0 - 1e-12:
        return PortfolioWeights(tickers, np.full(n, 1.0 / n))

    # the argmax is invariant to positive rescaling of either input
    trace = np.trace(cov) / n
    cov_n = cov / trace if trace > 0 else cov
    excess_n = excess / np.abs(excess).max()

    if method == "gradient":
        w = projected_gradient_sharpe(excess_n, cov_n, min_weight)
    elif method == "qp":
        try:
            w = _solve_transformed(excess_n, cov_n, min_weight)
        except SolverError as exc:
            log.warning("QP failed (%s); using projected gradient", exc)
            w = projected_gradient_sharpe(excess_n, cov_n, min_weight)
    else:
        raise ValueError(f"unknown method {method!r}")
    w = _polish(w, min_weight)
    if float(w @ excess) <= 0:
        raise InfeasibleError("best feasible portfolio does not beat the risk-free rate")
    return PortfolioWeights(tickers, w)


@dataclass(frozen=True)
class SimConfig:
    """Settings for the simulated-market strategy."""

    weights: BlendWeights = field(default_factory=lambda: BlendWeights(w_L=0.26, w_M=0.74))
    rho_c: float = 0.9
    top_fraction: float = 0.03
    louvain_seed: int = 0
    horizon: Optional[int] = None


@dataclass
class BacktestReport:
    strategy: str
    dt: int
    rebalance_dates: list
    period_end_dates: list
    period_returns: list
    cumulative: list
    seed: Optional[int] = None
    solver_failures: list = field(default_factory=list)

    @property
    def final_return(self):
        return self.cumulative[-1] if self.cumulative else 0.0

    def to_dict(self):
        iso = lambda d: d.isoformat() if hasattr(d, "isoformat") else d
        return {
            "strategy": self.strategy,
            "dt": self.dt,
            "seed": self.seed,
            "rebalance_dates": [iso(d) for d in self.rebalance_dates],
            "period_end_dates": [iso(d) for d in self.period_end_dates],
            "period_returns": list(self.period_returns),
            "cumulative": list(self.cumulative),
            "solver_failures": [{"date": iso(d), "error": e} for d, e in self.solver_failures],
        }


def historical_inputs(prices):
    """Mean and sample covariance of simple daily returns."""
    r = prices[1:] / prices[:-1] - 1.0
    return r.mean(axis=0), np.atleast_2d(np.cov(r, rowvar=False))


def simulated_inputs(window, sim, master_seed):
    """Expected returns and covariance from one blended market ensemble."""
    params, plan, market = simulation_inputs(window, sim.rho_c, sim.louvain_seed, sim.top_fraction)
    if not market:
        raise InfeasibleError("no influential stocks in the estimation window")
    t_steps = (sim.horizon or len(window.dates) - 1) + 1
    ens = build_ensemble(params, window.tickers, t_steps, plan, sim.weights, master_seed)
    logr = np.diff(np.log(ens.paths), axis=0)
    simple = np.expm1(logr)
    return np.expm1(logr.mean(axis=0)), np.atleast_2d(np.cov(simple, rowvar=False))


def backtest(panel, dt, strategy="historical", sim=None, seed=0, r_f=0.0, min_weight=DEFAULT_MIN_WEIGHT):
    """Walk-forward max-Sharpe backtest.

    At each rebalance position ``k = dt, 2 dt, ...`` the inputs are estimated
    on prices ``k-dt .. k`` and the weights are held (buy and hold) until
    ``min(k + dt, last date)``.  When inputs or the solver fail the previous
    weights are kept (equal weights before the first success) and the failure
    is recorded.
    """
    dt = int(dt)
    n_dates = len(panel.dates)
    if dt < 1:
        raise ValueError("dt must be >= 1")
    if n_dates < dt + 2:
        raise ValueError(f"panel has {n_dates} dates; need at least dt + 2 = {dt + 2}")
    if strategy not in ("historical", "simulated"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "simulated" and sim is None:
        raise ValueError("simulated strategy needs a SimConfig")

    prices = panel.prices
    n = prices.shape[1]
    held = np.full(n, 1.0 / n)
    report = BacktestReport(strategy, dt, [], [], [], [], seed if strategy == "simulated" else None)
    growth = 1.0
    k = dt
    while k < n_dates - 1:
        end = min(k + dt, n_dates - 1)
        try:
            if n == 1:
                held = np.ones(1)
            else:
                if strategy == "historical":
                    mu, cov = historical_inputs(prices[k - dt : k + 1])
                else:
                    window = panel.window(k - dt, k + 1)
                    mu, cov = simulated_inputs(window, sim, rng.derive_seed(seed, k))
                held = max_sharpe_weights(mu, cov, r_f, min_weight, panel.tickers).weights
        except Exception as exc:  # recorded; the portfolio keeps its weights
            log.info("%s dt=%d at %s: %s", strategy, dt, panel.dates[k], exc)
            report.solver_failures.append((panel.dates[k], f"{type(exc).__name__}: {exc}"))
        period = float(held @ (prices[end] / prices[k])) - 1.0
        growth *= 1.0 + period
        report.rebalance_dates.append(panel.dates[k])
        report.period_end_dates.append(panel.dates[end])
        report.period_returns.append(period)
        report.cumulative.append(growth - 1.0)
        k += dt
    return report


@dataclass
class ComparisonReport:
    historical: dict
    simulated: dict

    def summary(self):
        rows = []
        for dt, base in self.historical.items():
            finals = [r.final_return for r in self.simulated.get(dt, [])]
            rows.append(
                {
                    "dt": dt,
                    "historical": base.final_return,
                    "simulated_mean": float(np.mean(finals)) if finals else None,
                    "simulated_min": float(np.min(finals)) if finals else None,
                    "simulated_max": float(np.max(finals)) if finals else None,
                    "n_runs": len(finals),
                }
            )
        return rows

    def to_dict(self):
        return {
            "summary": self.summary(),
            "historical": {str(dt): r.to_dict() for dt, r in self.historical.items()},
            "simulated": {str(dt): [r.to_dict() for r in runs] for dt, runs in self.simulated.items()},
        }


def run_seeds(base_seed, n_runs):
    return [int(base_seed) + i for i in range(n_runs)]


def compare_strategies(panel, dts=DEFAULT_DTS, n_runs=10, sim=None, base_seed=0, r_f=0.0, min_weight=DEFAULT_MIN_WEIGHT):
    """Historical baseline and ``n_runs`` simulated backtests for every ``dt``."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    sim = sim or SimConfig()
    hist, simulated = {}, {}
    for dt in dts:
        hist[dt] = backtest(panel, dt, "historical", r_f=r_f, min_weight=min_weight)
        simulated[dt] = [
            backtest(panel, dt, "simulated", sim, seed=s, r_f=r_f, min_weight=min_weight)
            for s in run_seeds(base_seed, n_runs)
        ]
    return ComparisonReport(hist, simulated)
