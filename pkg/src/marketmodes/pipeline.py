"""End-to-end market/noise decomposition of a price panel."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corrnet import CorrMatrix, NetworkAnalysis, analyze_network, correlation_matrix
from .gbm import community_channels, market_channels, noise_channels
from .market_data import estimate_panel_params, log_returns
from .spectral import (
    TOP_FRACTION,
    MpParams,
    RescaledCorr,
    SpectralError,
    SpectralSplit,
    eigendecompose,
    influential_stocks,
    market_and_noise,
    rescale_correlation,
    rescaled_sigma2,
    select_market_modes,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Decomposition:
    corr: CorrMatrix
    network: NetworkAnalysis
    split: SpectralSplit
    mp: MpParams
    mp_rescaled: Optional[MpParams]
    market: RescaledCorr
    noise: RescaledCorr
    market_raw: np.ndarray
    noise_raw: np.ndarray
    selection_error: Optional[str] = None

    @property
    def market_tickers(self):
        return list(self.split.market_tickers)


def spectral_params(n_observations, n_stocks, top_eigenvalue):
    """Unrescaled and rescaled Marchenko-Pastur parameters for a spectrum."""
    mp = MpParams.for_panel(n_observations, n_stocks)
    s2 = rescaled_sigma2(min(max(top_eigenvalue, 0.0), n_stocks), n_stocks)
    rescaled = MpParams.for_panel(n_observations, n_stocks, s2) if s2 > 0 else None
    return mp, rescaled


def decompose(
    panel,
    rho_c=0.9,
    louvain_seed=0,
    top_fraction=TOP_FRACTION,
    count_prices=False,
    check_edge=True,
    require_market=True,
):
    """Correlation, network statistics, market-mode selection and the market/noise split.

    ``count_prices`` sets ``T`` in ``Q = T / N`` to the number of price dates
    instead of the number of returns.  With ``require_market=False`` a failed
    market-mode selection leaves the market set empty instead of raising.
    """
    rets = log_returns(panel)
    corr = correlation_matrix(rets)
    network = analyze_network(corr, rho_c=rho_c, seed=louvain_seed)
    split = eigendecompose(corr)
    t_obs = len(panel.dates) if count_prices else rets.returns.shape[0]
    mp, mp_rescaled = spectral_params(t_obs, corr.n, float(split.eigenvalues[0]))
    selection_error = None
    try:
        split = select_market_modes(split, network.stats, mp, top_fraction, check_edge=check_edge)
    except SpectralError as exc:
        if require_market:
            raise
        selection_error = str(exc)
        log.warning("market-mode selection failed (%s); continuing with no market modes", exc)
    market_raw, noise_raw = market_and_noise(split)
    return Decomposition(
        corr,
        network,
        split,
        mp,
        mp_rescaled,
        rescale_correlation(market_raw, corr.tickers),
        rescale_correlation(noise_raw, corr.tickers),
        market_raw,
        noise_raw,
        selection_error,
    )


def community_inputs(tickers, network):
    """Community labels and clustering for every ticker.

    Tickers outside the graph get their own singleton label (numbered after
    the graph's labels) and zero clustering, so their community walk is a
    plain GBM.
    """
    comm = network.communities
    clus = network.column("clustering")
    next_label = max(comm.values(), default=-1) + 1
    labels, strength = {}, {}
    for t in tickers:
        if t in comm:
            labels[t], strength[t] = comm[t], clus[t]
        else:
            labels[t], strength[t] = next_label, 0.0
            next_label += 1
    return labels, strength


def channel_plan(tickers, corr, network, market_tickers):
    """Per-stock channel configurations for the L, M and N walk families."""
    labels, strength = community_inputs(tickers, network)
    plan = {"L": community_channels(tickers, labels, strength), "N": noise_channels(tickers)}
    if market_tickers:
        plan["M"] = market_channels(corr, tickers, market_tickers)
    return plan


def simulation_inputs(panel, rho_c=0.9, louvain_seed=0, top_fraction=TOP_FRACTION):
    """GBM parameters and channel plan fitted on a panel window (no spectral check)."""
    rets = log_returns(panel)
    corr = correlation_matrix(rets)
    network = analyze_network(corr, rho_c=rho_c, seed=louvain_seed)
    market = influential_stocks(network.stats, top_fraction)
    params = estimate_panel_params(panel)
    return params, channel_plan(panel.tickers, corr, network, market), market
