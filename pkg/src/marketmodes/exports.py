"""Plain CSV/JSON artifacts and their loaders."""

import csv
import json
from pathlib import Path

import numpy as np

from .calibrate import FitResult, GridSpec
from .corrnet import StockGraph
from .gbm import BlendWeights, CorrChannelConfig

FLOAT = "{:.17g}"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return FLOAT.format(float(v))
    return v


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# -- graph ------------------------------------------------------------------

NODE_COLUMNS = ["ticker", "degree", "eigencentrality", "pagerank", "clustering", "community", "sector"]


def write_edge_list(graph, path):
    write_csv(path, ["source", "target", "weight"], graph.edges)


def read_edge_list(path, rho_c=0.0):
    """Rebuild a :class:`StockGraph` from an edge list (nodes in first-seen order)."""
    nodes, seen, edges = [], set(), []
    for row in read_csv(path):
        s, t, w = row["source"], row["target"], float(row["weight"])
        for x in (s, t):
            if x not in seen:
                seen.add(x)
                nodes.append(x)
        edges.append((s, t, w))
    return StockGraph(nodes, edges, rho_c)


def write_node_attributes(network, path, sectors=None):
    sectors = sectors or {}
    rows = []
    for t in network.graph.nodes:
        s = network.stats[t]
        rows.append([t, s.degree, s.eigencentrality, s.pagerank, s.clustering, s.community, sectors.get(t, "UNKNOWN")])
    write_csv(path, NODE_COLUMNS, rows)


def read_node_attributes(path):
    out = {}
    for row in read_csv(path):
        out[row["ticker"]] = {
            "degree": int(row["degree"]),
            "eigencentrality": float(row["eigencentrality"]),
            "pagerank": float(row["pagerank"]),
            "clustering": float(row["clustering"]),
            "community": int(row["community"]),
            "sector": row["sector"],
        }
    return out


def write_value_histogram(path, values, bins=50, value_range=None):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        write_csv(path, ["bin_left", "bin_right", "count"], [])
        return
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    write_csv(path, ["bin_left", "bin_right", "count"], zip(edges[:-1], edges[1:], counts.tolist()))


# -- spectrum and matrices ---------------------------------------------------


def write_spectrum(split, path):
    market = set(split.market_indices)
    write_csv(
        path,
        ["index", "eigenvalue", "is_market"],
        [(i, float(v), int(i in market)) for i, v in enumerate(split.eigenvalues)],
    )


def read_spectrum(path):
    rows = read_csv(path)
    return np.array([float(r["eigenvalue"]) for r in rows]), [bool(int(r["is_market"])) for r in rows]


def write_eigen_histogram(hist, path, overlay_path):
    write_csv(
        path,
        ["bin_left", "bin_right", "count"],
        zip(hist.edges[:-1], hist.edges[1:], hist.counts.tolist()),
    )
    write_csv(
        overlay_path,
        ["lambda", "mp", "mp_rescaled"],
        zip(hist.curve_x, hist.mp_curve, hist.mp_rescaled_curve),
    )


def write_matrix(path, tickers, values):
    values = np.asarray(values, dtype=float)
    write_csv(path, ["ticker", *tickers], ([t, *row] for t, row in zip(tickers, values)))


def read_matrix(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        tickers, rows = [], []
        for rec in reader:
            tickers.append(rec[0])
            rows.append([float(x) for x in rec[1:]])
    if header[1:] != tickers:
        raise ValueError(f"{path}: row and column tickers differ")
    return tickers, np.array(rows)


# -- calibration ------------------------------------------------------------


def fit_result_to_dict(fit):
    return {
        "weights": fit.weights.as_dict(),
        "active": list(fit.grid_spec.active),
        "distance": fit.distance,
        "evaluations": fit.evaluations,
        "grid": {"step": fit.grid_spec.step, "refine": fit.grid_spec.refine, "bounds": list(fit.grid_spec.bounds)},
        "ensemble_seeds": list(fit.ensemble_seeds),
    }


def fit_result_from_dict(d):
    spec = GridSpec(d["grid"]["step"], tuple(d["active"]), d["grid"]["refine"], tuple(d["grid"]["bounds"]))
    w = d["weights"]
    return FitResult(BlendWeights(w["L"], w["M"], w["N"]), d["distance"], d["evaluations"], spec, tuple(d["ensemble_seeds"]))


def write_overlay(path, data, simulated, bins=50, value_range=(-1.0, 1.0)):
    """Histogram of data vs simulated correlation entries on shared bins."""
    data = np.asarray(data, dtype=float)
    simulated = np.asarray(simulated, dtype=float)
    hd, edges = np.histogram(data[np.isfinite(data)], bins=bins, range=value_range)
    hs, _ = np.histogram(simulated[np.isfinite(simulated)], bins=edges)
    write_csv(path, ["bin_left", "bin_right", "data_count", "simulated_count"],
              zip(edges[:-1], edges[1:], hd.tolist(), hs.tolist()))


# -- ensembles --------------------------------------------------------------


def ensemble_config_to_dict(tickers, channels, weights, master_seed, t_steps):
    return {
        "master_seed": int(master_seed),
        "t_steps": int(t_steps),
        "weights": weights.as_dict(),
        "tickers": list(tickers),
        "channels": {
            name: [{"c_eff": c.c_eff, "seed": c.seed} for c in confs] for name, confs in channels.items()
        },
    }


def ensemble_config_from_dict(d):
    channels = {
        name: [CorrChannelConfig(float(c["c_eff"]), int(c["seed"])) for c in confs]
        for name, confs in d["channels"].items()
    }
    w = d["weights"]
    weights = BlendWeights(w.get("L", 0.0), w.get("M", 0.0), w.get("N", 0.0))
    return d["tickers"], channels, weights, int(d["master_seed"]), int(d["t_steps"])


# -- backtests --------------------------------------------------------------


def write_cumulative_csv(comparison, path):
    rows = []
    for dt, report in comparison.historical.items():
        for d, c in zip(report.period_end_dates, report.cumulative):
            rows.append([d.isoformat(), f"historical_dt{dt}", 0, c])
    for dt, runs in comparison.simulated.items():
        for run, report in enumerate(runs):
            for d, c in zip(report.period_end_dates, report.cumulative):
                rows.append([d.isoformat(), f"simulated_dt{dt}", run, c])
    write_csv(path, ["date", "strategy", "run", "cum_return"], rows)
