"""Write a synthetic factor-model price panel and its sector file."""

import argparse
from pathlib import Path

from marketmodes.exports import write_csv
from marketmodes.market_data import write_price_panel
from marketmodes.synthetic import factor_panel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir")
    ap.add_argument("--stocks", type=int, default=60)
    ap.add_argument("--days", type=int, default=600)
    ap.add_argument("--sectors", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panel = factor_panel(args.stocks, args.days, args.sectors, seed=args.seed)
    write_price_panel(panel, out / "prices.csv")
    write_csv(out / "sectors.csv", ["ticker", "sector"], sorted(panel.sectors.items()))
    print(f"wrote {len(panel.tickers)} tickers x {len(panel.dates)} dates to {out}")


if __name__ == "__main__":
    main()
