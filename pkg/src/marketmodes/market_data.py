"""Price panels, log-returns and per-stock GBM parameter estimates."""

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

UNKNOWN_SECTOR = "UNKNOWN"


class DataFormatError(ValueError):
    """Raised when a CSV does not follow the panel or sector layout."""


class DataError(ValueError):
    """Raised when data parses but violates a panel invariant."""


class InsufficientDataError(ValueError):
    pass


# A price source turns (tickers, start, end) into panel-CSV bytes.  It is the
# hook a downloader plugs into; nothing in the package calls the network.
PriceSource = Callable[[list, _dt.date, _dt.date], bytes]


@dataclass(frozen=True)
class PricePanel:
    tickers: list
    dates: list
    prices: np.ndarray
    sectors: dict = field(default_factory=dict)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if len(set(self.tickers)) != len(self.tickers):
            raise DataError("duplicate tickers")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"dates not strictly increasing at {b}")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "tickers", list(self.tickers))
        object.__setattr__(self, "dates", list(self.dates))

    @property
    def shape(self):
        return self.prices.shape

    def sector(self, ticker):
        return self.sectors.get(ticker, UNKNOWN_SECTOR)

    def window(self, start, stop):
        """Sub-panel over date positions ``start:stop``."""
        return PricePanel(self.tickers, self.dates[start:stop], self.prices[start:stop], self.sectors)

    def select(self, tickers):
        idx = [self.tickers.index(t) for t in tickers]
        return PricePanel(list(tickers), self.dates, self.prices[:, idx], self.sectors)

    def check_complete(self):
        """Raise :class:`DataError` unless every price is present and positive."""
        bad = ~np.isfinite(self.prices) | (self.prices <= 0)
        if bad.any():
            t, i = np.argwhere(bad)[0]
            raise DataError(
                f"invalid price {self.prices[t, i]!r} for {self.tickers[i]} on {self.dates[t]}"
            )


@dataclass(frozen=True)
class ReturnPanel:
    tickers: list
    dates: list
    returns: np.ndarray


@dataclass(frozen=True)
class GbmParams:
    s0: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


def _parse_date(text, row, col):
    try:
        return _dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataFormatError(f"row {row}, column {col}: bad ISO date {text!r}") from None


def parse_panel_csv(text, sectors=None, allow_missing=False):
    """Parse panel-CSV text.

    Empty cells (and ``nan``) are read as missing.  With ``allow_missing``
    they are kept as NaN for :func:`clean_universe` to drop; otherwise they
    are a :class:`DataError`, as are non-positive prices.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty file") from None
    if not header or header[0].strip().lower() != "date":
        raise DataFormatError("row 1, column 1: first header cell must be 'date'")
    tickers = [h.strip() for h in header[1:]]
    if not tickers:
        raise DataFormatError("row 1: no ticker columns")

    dates, rows = [], []
    for lineno, record in enumerate(reader, start=2):
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(header):
            raise DataFormatError(
                f"row {lineno}: expected {len(header)} columns, found {len(record)}"
            )
        dates.append(_parse_date(record[0], lineno, 1))
        values = []
        for col, cell in enumerate(record[1:], start=2):
            cell = cell.strip()
            if cell == "" or cell.lower() == "nan":
                values.append(math.nan)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise DataFormatError(f"row {lineno}, column {col}: not a number {cell!r}") from None
        rows.append(values)

    prices = np.array(rows, dtype=float).reshape(len(rows), len(tickers))
    for t, i in np.argwhere(~(prices > 0)):
        missing = np.isnan(prices[t, i])
        if missing and allow_missing:
            continue
        what = "missing price" if missing else f"non-positive price {prices[t, i]}"
        raise DataError(f"{what} for {tickers[i]} on {dates[t].isoformat()}")
    return PricePanel(tickers, dates, prices, dict(sectors or {}))


def load_sectors(path):
    """Read a ``ticker,sector`` CSV into a dict."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"ticker", "sector"} <= set(reader.fieldnames):
            raise DataFormatError(f"{path}: sector CSV needs 'ticker,sector' columns")
        return {row["ticker"].strip(): row["sector"].strip() for row in reader}


def load_price_panel(path, sector_path=None, allow_missing=False):
    """Load a panel-CSV file (first column ``date``, one column per ticker)."""
    text = Path(path).read_text(encoding="utf-8")
    sectors = load_sectors(sector_path) if sector_path else None
    return parse_panel_csv(text, sectors=sectors, allow_missing=allow_missing)


def fetch_price_panel(source: PriceSource, tickers, start, end, sectors=None):
    """Build a panel from a pluggable price source; missing cells are kept as NaN."""
    payload = source(list(tickers), start, end)
    return parse_panel_csv(payload.decode("utf-8"), sectors=sectors, allow_missing=True)


def panel_to_csv(panel, float_format="{:.17g}"):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["date", *panel.tickers])
    for d, row in zip(panel.dates, panel.prices):
        label = d.isoformat() if hasattr(d, "isoformat") else str(d)
        writer.writerow([label, *(float_format.format(v) for v in row)])
    return buf.getvalue()


def write_price_panel(panel, path):
    Path(path).write_text(panel_to_csv(panel), encoding="utf-8")


def clean_universe(panel):
    """Drop every ticker with a missing price anywhere in the date range."""
    keep = np.all(np.isfinite(panel.prices) & (panel.prices > 0), axis=0)
    if not keep.any():
        raise DataError("no complete tickers")
    if keep.all():
        return panel
    tickers = [t for t, k in zip(panel.tickers, keep) if k]
    return PricePanel(tickers, panel.dates, panel.prices[:, keep], panel.sectors)


def log_returns(panel):
    if len(panel.dates) < 2:
        raise InsufficientDataError("need at least 2 dates to form returns")
    logp = np.log(panel.prices)
    return ReturnPanel(panel.tickers, panel.dates[1:], logp[1:] - logp[:-1])


def estimate_gbm_params(prices, window=None):
    """Estimate GBM parameters with a unit time step.

    ``s0`` is the last price in the window, ``sigma`` the sample standard
    deviation of daily log-returns, and ``mu`` the mean log-return plus
    ``sigma**2 / 2`` so that the simulated log-drift matches the history.
    A single return gives ``sigma = 0``.
    """
    p = np.asarray(prices, dtype=float)
    if window is not None:
        p = p[slice(*window) if isinstance(window, tuple) else window]
    if p.size < 2:
        raise InsufficientDataError("need at least 2 prices in the window")
    r = np.diff(np.log(p))
    sigma = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    return GbmParams(s0=float(p[-1]), mu=float(np.mean(r)) + 0.5 * sigma**2, sigma=sigma)


def estimate_panel_params(panel):
    """GBM parameters for every ticker over the whole panel, in ticker order."""
    return [estimate_gbm_params(panel.prices[:, i]) for i in range(len(panel.tickers))]
