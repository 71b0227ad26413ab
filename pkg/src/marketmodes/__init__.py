"""Market and noise components of stock-return correlations.

Network statistics pick the influential stocks, random-matrix theory splits
the correlation spectrum, correlated GBM ensembles reproduce both parts, and
the simulated market component feeds a max-Sharpe backtest.
"""

__version__ = "0.1.0"
