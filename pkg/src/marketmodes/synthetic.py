"""Synthetic factor-model price panels for demos and tests."""

import datetime as _dt

import numpy as np

from .market_data import PricePanel


def business_days(n, start=_dt.date(2019, 1, 2)):
    days = np.busday_offset(np.datetime64(start), np.arange(n), roll="forward")
    return [d.astype(object) for d in days]


def factor_panel(n_stocks=60, n_days=300, n_sectors=4, seed=0, market_vol=0.012,
                 sector_vol=0.008, idio_vol=(0.002, 0.012), drift=0.0004):
    """Prices driven by one market factor, sector factors and idiosyncratic noise.

    Idiosyncratic volatility is spread over ``idio_vol`` so that some stocks
    are strongly tied to the market factor and others barely.
    """
    rng = np.random.default_rng(seed)
    sectors = np.arange(n_stocks) % n_sectors
    market = rng.normal(0.0, market_vol, n_days - 1)
    sector_f = rng.normal(0.0, sector_vol, (n_days - 1, n_sectors))
    beta = rng.uniform(0.6, 1.4, n_stocks)
    idio = rng.uniform(*idio_vol, n_stocks) * rng.normal(size=(n_days - 1, n_stocks))
    r = drift + market[:, None] * beta + sector_f[:, sectors] + idio
    logp = np.log(rng.uniform(20, 200, n_stocks)) + np.vstack([np.zeros(n_stocks), np.cumsum(r, axis=0)])
    tickers = [f"S{i:03d}" for i in range(n_stocks)]
    return PricePanel(tickers, business_days(n_days), np.exp(logp),
                      {t: f"SECTOR{s}" for t, s in zip(tickers, sectors)})
