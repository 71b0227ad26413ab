"""Command line entry point: ``marketmodes {network,spectral,fit,backtest,all}``."""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import exports
from .calibrate import BlendSimulator, fit_weights
from .config import ConfigError, load_config
from .gbm import BlendWeights
from .corrnet import analyze_network, correlation_matrix
from .market_data import clean_universe, estimate_panel_params, load_price_panel, log_returns
from .pipeline import channel_plan, decompose
from .portfolio import SimConfig, compare_strategies
from .spectral import eigenvalue_histogram

log = logging.getLogger("marketmodes")

FITS = {
    "market": ("L", "M"),
    "noise": ("L", "N"),
    "total": ("N", "L", "M"),
}


def load_panel(cfg):
    panel = load_price_panel(cfg.prices, cfg.sectors, allow_missing=True)
    return clean_universe(panel)


def _summary(values):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return {"mean": None, "std": None, "count": 0}
    return {"mean": float(values.mean()), "std": float(values.std()), "count": int(values.size)}


def cmd_network(cfg, panel=None):
    panel = panel if panel is not None else load_panel(cfg)
    out = Path(cfg.out_dir)
    corr = correlation_matrix(log_returns(panel))
    net = analyze_network(corr, rho_c=cfg.rho_c, seed=cfg.louvain_seed)
    exports.write_edge_list(net.graph, out / "edges.csv")
    exports.write_node_attributes(net, out / "nodes.csv", panel.sectors)
    for name in ("degree", "eigencentrality", "clustering"):
        exports.write_value_histogram(out / f"{name}_hist.csv", list(net.column(name).values()), bins=cfg.bins)
    degrees = np.array(list(net.column("degree").values()), dtype=float)
    sizes = np.bincount(list(net.communities.values())) if net.stats else np.zeros(0, int)
    exports.write_json(
        out / "network_summary.json",
        {
            "rho_c": cfg.rho_c,
            "n_tickers": len(panel.tickers),
            "n_dates": len(panel.dates),
            "n_nodes": net.graph.n_nodes,
            "n_edges": net.graph.n_edges,
            "n_communities": int(sizes.size),
            "n_multi_member_communities": int((sizes > 1).sum()),
            "max_degree": int(degrees.max()) if degrees.size else 0,
            "median_degree": float(np.median(degrees)) if degrees.size else 0.0,
        },
    )
    log.info("network: %d nodes, %d edges", net.graph.n_nodes, net.graph.n_edges)
    return net


def _decompose(cfg, panel):
    return decompose(
        panel,
        rho_c=cfg.rho_c,
        louvain_seed=cfg.louvain_seed,
        top_fraction=cfg.top_fraction,
        count_prices=cfg.count_prices,
        check_edge=cfg.check_edge,
        require_market=False,
    )


def cmd_spectral(cfg, panel=None):
    panel = panel if panel is not None else load_panel(cfg)
    out = Path(cfg.out_dir)
    dec = _decompose(cfg, panel)
    tickers = dec.corr.tickers
    exports.write_spectrum(dec.split, out / "spectrum.csv")
    hist = eigenvalue_histogram(dec.split, cfg.bins, mp=dec.mp, mp_rescaled=dec.mp_rescaled)
    exports.write_eigen_histogram(hist, out / "eigen_hist.csv", out / "mp_overlay.csv")
    exports.write_matrix(out / "corr_matrix.csv", tickers, dec.corr.values)
    exports.write_matrix(out / "market_matrix.csv", tickers, dec.market_raw)
    exports.write_matrix(out / "noise_matrix.csv", tickers, dec.noise_raw)
    entries = {
        "full": dec.corr.offdiagonal(),
        "market": dec.market.offdiagonal(),
        "noise": dec.noise.offdiagonal(),
    }
    for name, vals in entries.items():
        exports.write_value_histogram(out / f"{name}_entries_hist.csv", vals, bins=cfg.bins, value_range=(-1, 1))
    exports.write_json(
        out / "spectral_summary.json",
        {
            "n_stocks": dec.corr.n,
            "q": dec.mp.q,
            "lambda_plus": dec.mp.lambda_plus,
            "lambda_minus": dec.mp.lambda_minus,
            "lambda_plus_rescaled": dec.mp_rescaled.lambda_plus if dec.mp_rescaled else None,
            "top_eigenvalues": dec.split.eigenvalues[:20].tolist(),
            "n_market": dec.split.n_market,
            "market_tickers": list(dec.split.market_tickers),
            "market_selection_error": dec.selection_error,
            "entries": {k: _summary(v) for k, v in entries.items()},
        },
    )
    return dec


def _simulator(panel, dec):
    params = estimate_panel_params(panel)
    plan = channel_plan(panel.tickers, dec.corr, dec.network, dec.market_tickers)
    return BlendSimulator(params, panel.tickers, len(panel.dates), plan)


def cmd_fit(cfg, panel=None):
    panel = panel if panel is not None else load_panel(cfg)
    out = Path(cfg.out_dir)
    dec = _decompose(cfg, panel)
    sim = _simulator(panel, dec)
    results = {}
    if cfg.planted_weights:
        active = tuple(cfg.planted_weights)
        planted = BlendWeights.from_mapping(cfg.planted_weights)
        target = sim(planted, cfg.master_seeds[0])
        jobs = {"selfcheck": (active, target.offdiagonal())}
    else:
        if not dec.market_tickers:
            raise RuntimeError(f"no market modes to fit against: {dec.selection_error}")
        jobs = {
            "market": (FITS["market"], dec.market.offdiagonal()),
            "noise": (FITS["noise"], dec.noise.offdiagonal()),
            "total": (FITS["total"], dec.corr.offdiagonal()),
        }
    for name, (active, target) in jobs.items():
        fit = fit_weights(target, sim, active, cfg.grid_step, cfg.master_seeds)
        payload = exports.fit_result_to_dict(fit)
        if cfg.planted_weights:
            payload["planted"] = BlendWeights.from_mapping(cfg.planted_weights).as_dict()
        best = sim(fit.weights, cfg.master_seeds[0]).offdiagonal()
        payload["data_entries"] = _summary(target)
        payload["simulated_entries"] = _summary(best)
        exports.write_json(out / f"fit_{name}.json", payload)
        exports.write_overlay(out / f"fit_{name}_overlay.csv", target, best, bins=cfg.bins)
        log.info("fit %s: %s (W1 %.4g)", name, fit.active_weights(), fit.distance)
        results[name] = fit
    return results


def cmd_backtest(cfg, panel=None):
    panel = panel if panel is not None else load_panel(cfg)
    out = Path(cfg.out_dir)
    sim = SimConfig(
        weights=BlendWeights.from_mapping(cfg.market_weights),
        rho_c=cfg.rho_c,
        top_fraction=cfg.top_fraction,
        louvain_seed=cfg.louvain_seed,
    )
    comparison = compare_strategies(
        panel, [int(d) for d in cfg.dt], cfg.n_runs, sim, base_seed=cfg.seed, r_f=cfg.r_f, min_weight=cfg.min_weight
    )
    exports.write_json(out / "backtest_report.json", comparison.to_dict())
    exports.write_cumulative_csv(comparison, out / "cumulative_returns.csv")
    for row in comparison.summary():
        log.info("dt=%s historical=%.4f simulated mean=%s", row["dt"], row["historical"], row["simulated_mean"])
    return comparison


def cmd_all(cfg):
    panel = load_panel(cfg)
    cmd_network(cfg, panel)
    cmd_spectral(cfg, panel)
    cmd_fit(cfg, panel)
    cmd_backtest(cfg, panel)


COMMANDS = {
    "network": cmd_network,
    "spectral": cmd_spectral,
    "fit": cmd_fit,
    "backtest": cmd_backtest,
    "all": cmd_all,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="marketmodes", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--prices", help="panel CSV (overrides config)")
    parser.add_argument("--sectors", help="ticker,sector CSV (overrides config)")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--rho-c", dest="rho_c", type=float)
    parser.add_argument("--dt", type=int, nargs="+")
    parser.add_argument("--runs", dest="n_runs", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("prices", "sectors", "out_dir", "seed", "rho_c", "dt", "n_runs")}
    try:
        cfg = load_config(args.config, overrides).validate()
        COMMANDS[args.command](cfg)
    except (ConfigError, ValueError, KeyError, RuntimeError, OSError) as exc:
        print(f"marketmodes {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
