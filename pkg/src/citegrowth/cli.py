"""Command-line interface.

Subcommands mirror the pipeline stages; `run` executes everything.
Stage commands read their inputs from the output directory written by
earlier stages and fail fast when a required artifact is missing.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .graph import generate_synthetic_graph, load_graph, write_graph, GraphStats
from .walks import WalkParams, generate_walks
from .embedding import EmbeddingParams, train_embedding, Embedding
from .cluster import ward_linkage, inconsistency, cut_by_inconsistency, Dendrogram, ClusterAssignment
from .graph import Adjacency
from .hawkes import HawkesParams, fit_hawkes
from .arima import ArimaModel, select_order, arima_forecast
from .lstm import LstmConfig, TrainedLstm, train_lstm, lstm_forecast
from .metrics import ClusterForecast, build_score_table, write_score_csv, write_score_json
from .pipeline import (RunConfig, StageError, build_series, realized_count, adf_report,
                       run_pipeline, _hawkes_month_forecast)

log = logging.getLogger("citegrowth")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_ini(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.models is not None:
        cfg.models = tuple(tok.strip() for tok in args.models.split(",") if tok.strip())
    if args.deterministic:
        cfg.deterministic = True
    cfg.__post_init__()
    return cfg


def _require(path, stage):
    if not os.path.exists(path):
        raise StageError(stage, f"missing artifact {path}; run the producing stage first")
    return path


def _load_run_graph(cfg: RunConfig):
    if cfg.graph_path:
        return load_graph(cfg.graph_path, cfg.graph_format, cfg.times_path)
    gen_edges = os.path.join(cfg.out, "synthetic_edges.csv")
    if os.path.exists(gen_edges):
        return load_graph(gen_edges, "edge-csv", os.path.join(cfg.out, "synthetic_edges.times.csv"))
    return generate_synthetic_graph(cfg.synthetic_blocks, cfg.synthetic_nodes_per_block,
                                    cfg.synthetic_p_in, cfg.synthetic_p_out,
                                    seed=cfg.substream_seed("sbm"))


def _load_assignment(cfg: RunConfig, g) -> ClusterAssignment:
    path = _require(os.path.join(cfg.out, "assignments.csv"), "series")
    labels = np.empty(g.node_count, dtype=np.int64)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lab, c in reader:
            labels[g.label_index[lab]] = int(c)
    return ClusterAssignment(labels, k=int(labels.max()) + 1)


def cmd_generate(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    g = generate_synthetic_graph(cfg.synthetic_blocks, cfg.synthetic_nodes_per_block,
                                 cfg.synthetic_p_in, cfg.synthetic_p_out,
                                 seed=cfg.substream_seed("sbm"))
    edges_path = os.path.join(cfg.out, "synthetic_edges.csv")
    write_graph(g, edges_path, "edge-csv",
                times_path=os.path.join(cfg.out, "synthetic_edges.times.csv"))
    with open(os.path.join(cfg.out, "synthetic_blocks.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "block"])
        for i, lab in enumerate(g.labels):
            w.writerow([lab, int(g.block[i])])
    print(GraphStats.from_graph(g).to_json())


def cmd_embed(args):
    cfg = _load_config(args)
    os.makedirs(cfg.out, exist_ok=True)
    g = _load_run_graph(cfg)
    adj = Adjacency(g.edges, g.node_count, directed=cfg.directed_walks)
    wp = WalkParams(p=cfg.walks.p, q=cfg.walks.q, walk_length=cfg.walks.walk_length,
                    walks_per_node=cfg.walks.walks_per_node, seed=cfg.substream_seed("walks"))
    corpus = generate_walks(adj, wp)
    ep = EmbeddingParams(dimension=cfg.embedding.dimension, window=cfg.embedding.window,
                         negatives=cfg.embedding.negatives, epochs=cfg.embedding.epochs,
                         alpha0=cfg.embedding.alpha0, seed=cfg.substream_seed("sgd"))
    emb = train_embedding(corpus, g.node_count, ep)
    emb.save(os.path.join(cfg.out, "embedding.txt"), labels=g.labels)
    print(f"embedding: {g.node_count} x {ep.dimension} -> {cfg.out}/embedding.txt")


def cmd_cluster(args):
    cfg = _load_config(args)
    emb = Embedding.load(_require(os.path.join(cfg.out, "embedding.txt"), "cluster"))
    dend = ward_linkage(emb.vectors, normalize=cfg.normalize_embedding)
    dend.save(os.path.join(cfg.out, "dendrogram.txt"))
    assignment = cut_by_inconsistency(dend, cfg.cut_fraction, cfg.cut_depth)
    assignment.save(os.path.join(cfg.out, "assignments.csv"), node_labels=emb.labels)
    print(f"clusters: {assignment.k}")


def cmd_series(args):
    cfg = _load_config(args)
    g = _load_run_graph(cfg)
    assignment = _load_assignment(cfg, g)
    series_list = build_series(g, assignment, cfg)
    with open(os.path.join(cfg.out, "series.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster", "month_offset", "count"])
        for cs in series_list:
            for mo, cnt in enumerate(cs.counts):
                w.writerow([cs.cluster_id, mo, int(cnt)])
    with open(os.path.join(cfg.out, "adf.json"), "w") as fh:
        json.dump(adf_report(series_list), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"series: {len(series_list)} clusters x {cfg.n_train_months} months")


def _rebuild_series(cfg):
    g = _load_run_graph(cfg)
    assignment = _load_assignment(cfg, g)
    return g, assignment, build_series(g, assignment, cfg)


def cmd_fit(args):
    cfg = _load_config(args)
    _, _, series_list = _rebuild_series(cfg)
    fits_dir = os.path.join(cfg.out, "fits")
    os.makedirs(fits_dir, exist_ok=True)
    fittable = [cs for cs in series_list if cs.n_in_window > 0]
    if "hawkes" in cfg.models:
        fitted = {cs.cluster_id: fit_hawkes(cs.events) for cs in fittable if len(cs.events) >= 5}
        with open(os.path.join(fits_dir, "hawkes.json"), "w") as fh:
            json.dump({str(c): json.loads(p.to_json()) for c, p in sorted(fitted.items())},
                      fh, indent=2, sort_keys=True)
    if "arima" in cfg.models:
        fitted = {cs.cluster_id: select_order(cs.counts, cfg.arima_max_p, cfg.arima_max_d,
                                              cfg.arima_max_q) for cs in fittable}
        with open(os.path.join(fits_dir, "arima.json"), "w") as fh:
            json.dump({str(c): json.loads(m.to_json()) for c, m in sorted(fitted.items())},
                      fh, indent=2, sort_keys=True)
    if "lstm" in cfg.models:
        for cs in fittable:
            lc = LstmConfig(units=cfg.lstm.units, batch_size=cfg.lstm.batch_size,
                            dropout=cfg.lstm.dropout, learning_rate=cfg.lstm.learning_rate,
                            window=cfg.lstm.window, max_epochs=cfg.lstm.max_epochs,
                            seed=cfg.substream_seed(f"dropout/{cs.cluster_id}"))
            train_lstm(cs.counts, lc).save(os.path.join(fits_dir, f"lstm_{cs.cluster_id}.npz"))
    print(f"fitted models: {', '.join(cfg.models)}")


def cmd_forecast(args):
    cfg = _load_config(args)
    g, assignment, series_list = _rebuild_series(cfg)
    fits_dir = os.path.join(cfg.out, "fits")
    t_end = float(cfg.n_train_months)
    rows = []
    by_cluster = {cs.cluster_id: cs for cs in series_list}
    if "hawkes" in cfg.models:
        with open(_require(os.path.join(fits_dir, "hawkes.json"), "forecast")) as fh:
            fitted = {int(c): HawkesParams(**d) for c, d in json.load(fh).items()}
        for h in cfg.horizons:
            for c, params in sorted(fitted.items()):
                cs = by_cluster[c]
                pred = _hawkes_month_forecast(params, cs.events, t_end, h)
                rows.append((h, "hawkes", c, pred,
                             realized_count(g, assignment, cfg, c, h), float(cs.counts[-1])))
    if "arima" in cfg.models:
        with open(_require(os.path.join(fits_dir, "arima.json"), "forecast")) as fh:
            fitted = {int(c): ArimaModel.from_json(json.dumps(d)) for c, d in json.load(fh).items()}
        for h in cfg.horizons:
            for c, m in sorted(fitted.items()):
                cs = by_cluster[c]
                pred = float(arima_forecast(m, cs.counts, h)[-1])
                rows.append((h, "arima", c, pred,
                             realized_count(g, assignment, cfg, c, h), float(cs.counts[-1])))
    if "lstm" in cfg.models:
        for cs in series_list:
            ck = os.path.join(fits_dir, f"lstm_{cs.cluster_id}.npz")
            if not os.path.exists(ck):
                continue
            model = TrainedLstm.load(ck)
            for h in cfg.horizons:
                pred = float(lstm_forecast(model, cs.counts, h)[-1])
                rows.append((h, "lstm", cs.cluster_id, pred,
                             realized_count(g, assignment, cfg, cs.cluster_id, h),
                             float(cs.counts[-1])))
    with open(os.path.join(cfg.out, "forecasts.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["horizon_months", "model", "cluster", "predicted", "realized", "reference"])
        for h, model, c, pred, real, ref in sorted(rows, key=lambda r: (r[0], r[1], r[2])):
            w.writerow([h, model, c, f"{pred:.12g}", f"{real:.12g}", f"{ref:.12g}"])
    print(f"forecasts: {len(rows)} rows")


def _read_forecasts(cfg):
    path = _require(os.path.join(cfg.out, "forecasts.csv"), "score")
    forecasts = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for h, model, c, pred, real, ref in reader:
            forecasts.setdefault((int(h), model), []).append(ClusterForecast(
                cluster_id=int(c), model=model, predicted=float(pred),
                realized=float(real), reference=float(ref)))
    return forecasts


def cmd_score(args):
    cfg = _load_config(args)
    forecasts = _read_forecasts(cfg)
    scorable = {k: v for k, v in forecasts.items() if any(f.realized != 0 for f in v)}
    rows = build_score_table(scorable)
    write_score_csv(rows, os.path.join(cfg.out, "scores.csv"))
    write_score_json(rows, os.path.join(cfg.out, "scores.json"))
    for r in rows:
        print(f"h={r.horizon:>2} {r.model:<6} MAPE={r.mape:7.2f}%  DA={r.direction_accuracy:6.2f}%  "
              f"filtered {r.filtered.label}")


def cmd_report(args):
    cfg = _load_config(args)
    report_dir = os.path.join(cfg.out, "report")
    os.makedirs(report_dir, exist_ok=True)
    dend = Dendrogram.load(_require(os.path.join(cfg.out, "dendrogram.txt"), "report"))
    inc = inconsistency(dend, cfg.cut_depth)
    with open(os.path.join(report_dir, "dendrogram_coords.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["merge", "left", "right", "height", "size", "inconsistency"])
        for i, (left, right, h, size) in enumerate(dend.merges):
            w.writerow([i, int(left), int(right), f"{h:.12g}", int(size), f"{inc[i]:.12g}"])
    forecasts = _read_forecasts(cfg)
    for h in cfg.horizons:
        with open(os.path.join(report_dir, f"bars_h{h}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cluster", "model", "predicted", "realized"])
            for (hh, model), fcs in sorted(forecasts.items()):
                if hh != h:
                    continue
                for f in fcs:
                    w.writerow([f.cluster_id, model, f"{f.predicted:.12g}", f"{f.realized:.12g}"])
    print(f"report written to {report_dir}")


def cmd_run(args):
    cfg = _load_config(args)
    manifest = run_pipeline(cfg)
    print(f"run complete: {len(manifest['artifacts'])} artifacts in {cfg.out}")


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="citegrowth",
                                     description="citation-network growth analysis pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "generate": (cmd_generate, "write a synthetic benchmark graph"),
        "embed": (cmd_embed, "random walks + skip-gram embedding"),
        "cluster": (cmd_cluster, "Ward clustering and flat cut"),
        "series": (cmd_series, "per-cluster monthly series + unit-root screen"),
        "fit": (cmd_fit, "fit the enabled forecast models"),
        "forecast": (cmd_forecast, "produce horizon forecasts"),
        "score": (cmd_score, "MAPE / direction-accuracy tables"),
        "report": (cmd_report, "plot-data CSVs (dendrogram, bars)"),
        "run": (cmd_run, "all stages end to end"),
    }
    for name, (fn, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, help="root random seed")
        p.add_argument("--models", help="comma-separated subset of hawkes,arima,lstm")
        p.add_argument("--out", help="output directory")
        p.add_argument("--deterministic", action="store_true",
                       help="force single-threaded reproducible mode")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
