"""End-to-end orchestration: graph -> embedding -> communities ->
per-community monthly series -> three forecasters -> score tables.

All randomness flows from one root seed through named sub-streams, so a
run is a pure function of (inputs, config, seed) in deterministic mode.
Every stage writes its artifact into the output directory and the run
ends with a manifest listing config, seeds and artifact hashes.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from . import __version__
from .graph import (CitationGraph, GraphStats, Adjacency,
                    generate_synthetic_graph, load_graph, parse_month)
from .walks import WalkParams, generate_walks
from .embedding import EmbeddingParams, train_embedding
from .cluster import ward_linkage, inconsistency, cut_by_inconsistency, ClusterAssignment
from .hawkes import HawkesParams, EventSeries, detie, fit_hawkes, hawkes_forecast
from .arima import select_order, arima_forecast, adf_test
from .lstm import LstmConfig, train_lstm, lstm_forecast
from .metrics import ClusterForecast, build_score_table, write_score_csv, write_score_json

log = logging.getLogger(__name__)

ALL_MODELS = ("hawkes", "arima", "lstm")


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    # data
    graph_path: str | None = None
    times_path: str | None = None
    graph_format: str = "edge-csv"
    synthetic_blocks: int = 4
    synthetic_nodes_per_block: int = 50
    synthetic_p_in: float = 0.2
    synthetic_p_out: float = 0.005
    # walks / embedding / clustering
    walks: WalkParams = field(default_factory=WalkParams)
    embedding: EmbeddingParams = field(default_factory=EmbeddingParams)
    directed_walks: bool = False
    cut_fraction: float = 0.2
    cut_depth: int = 2
    normalize_embedding: bool = False
    # series and forecasting
    train_start: float = parse_month("1985-01")
    train_end: float = parse_month("2005-12")  # forecast origin month
    horizons: tuple = (3, 12)
    target: str = "applications"  # or "citations" (in-edge timestamps)
    models: tuple = ALL_MODELS
    arima_max_p: int = 5
    arima_max_d: int = 2
    arima_max_q: int = 5
    lstm: LstmConfig = field(default_factory=LstmConfig)
    # run
    seed: int = 0
    out: str = "out"
    deterministic: bool = True

    def __post_init__(self):
        if any(h <= 0 for h in self.horizons):
            raise ValueError("horizons must be positive")
        if self.target not in ("applications", "citations"):
            raise ValueError("target must be 'applications' or 'citations'")
        for m in self.models:
            if m not in ALL_MODELS:
                raise ValueError(f"unknown model {m!r}")

    @property
    def n_train_months(self) -> int:
        # window covers whole months train_start .. train_end inclusive
        return int(self.train_end - self.train_start) + 1

    @classmethod
    def from_ini(cls, path) -> "RunConfig":
        cp = configparser.ConfigParser()
        with open(path) as fh:
            cp.read_file(fh)
        cfg = cls()

        def get(section, key, conv, current):
            if cp.has_option(section, key):
                if conv is bool:
                    return cp.getboolean(section, key)
                return conv(cp.get(section, key))
            return current

        cfg.graph_path = get("data", "graph", str, cfg.graph_path)
        cfg.times_path = get("data", "times", str, cfg.times_path)
        cfg.graph_format = get("data", "format", str, cfg.graph_format)
        cfg.synthetic_blocks = get("data", "blocks", int, cfg.synthetic_blocks)
        cfg.synthetic_nodes_per_block = get("data", "nodes_per_block", int, cfg.synthetic_nodes_per_block)
        cfg.synthetic_p_in = get("data", "p_in", float, cfg.synthetic_p_in)
        cfg.synthetic_p_out = get("data", "p_out", float, cfg.synthetic_p_out)
        cfg.walks = WalkParams(
            p=get("walks", "p", float, cfg.walks.p),
            q=get("walks", "q", float, cfg.walks.q),
            walk_length=get("walks", "walk_length", int, cfg.walks.walk_length),
            walks_per_node=get("walks", "walks_per_node", int, cfg.walks.walks_per_node),
        )
        cfg.directed_walks = get("walks", "directed", bool, cfg.directed_walks)
        cfg.embedding = EmbeddingParams(
            dimension=get("embedding", "dimension", int, cfg.embedding.dimension),
            window=get("embedding", "window", int, cfg.embedding.window),
            negatives=get("embedding", "negatives", int, cfg.embedding.negatives),
            epochs=get("embedding", "epochs", int, cfg.embedding.epochs),
            alpha0=get("embedding", "alpha0", float, cfg.embedding.alpha0),
        )
        cfg.cut_fraction = get("cluster", "fraction", float, cfg.cut_fraction)
        cfg.cut_depth = get("cluster", "depth", int, cfg.cut_depth)
        cfg.normalize_embedding = get("cluster", "normalize", bool, cfg.normalize_embedding)
        cfg.train_start = get("series", "train_start", parse_month, cfg.train_start)
        cfg.train_end = get("series", "train_end", parse_month, cfg.train_end)
        if cp.has_option("series", "horizons"):
            cfg.horizons = tuple(int(tok) for tok in cp.get("series", "horizons").split(","))
        cfg.target = get("series", "target", str, cfg.target)
        if cp.has_option("models", "enabled"):
            cfg.models = tuple(tok.strip() for tok in cp.get("models", "enabled").split(",") if tok.strip())
        cfg.arima_max_p = get("arima", "max_p", int, cfg.arima_max_p)
        cfg.arima_max_d = get("arima", "max_d", int, cfg.arima_max_d)
        cfg.arima_max_q = get("arima", "max_q", int, cfg.arima_max_q)
        cfg.lstm = LstmConfig(
            units=get("lstm", "units", int, cfg.lstm.units),
            batch_size=get("lstm", "batch_size", int, cfg.lstm.batch_size),
            dropout=get("lstm", "dropout", float, cfg.lstm.dropout),
            learning_rate=get("lstm", "learning_rate", float, cfg.lstm.learning_rate),
            window=get("lstm", "window", int, cfg.lstm.window),
            max_epochs=get("lstm", "max_epochs", int, cfg.lstm.max_epochs),
        )
        cfg.seed = get("run", "seed", int, cfg.seed)
        cfg.out = get("run", "out", str, cfg.out)
        cfg.deterministic = get("run", "deterministic", bool, cfg.deterministic)
        cfg.__post_init__()
        return cfg

    def substream_seed(self, name: str) -> int:
        tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "big")
        return int(np.random.SeedSequence((self.seed, tag)).generate_state(1)[0])


@dataclass
class CommunitySeries:
    cluster_id: int
    counts: np.ndarray           # monthly counts over the train window
    events: EventSeries          # detied event times, offset from train_start
    n_members: int
    n_in_window: int


def _event_times(g: CitationGraph, assignment: ClusterAssignment, cluster, target):
    members = np.where(assignment.labels == cluster)[0]
    if target == "applications":
        return g.app_time[members]
    # citation events received by the cluster: timestamps of citing nodes
    mask = np.isin(g.edges[:, 1], members)
    return g.app_time[g.edges[mask, 0]]


def build_series(g: CitationGraph, assignment: ClusterAssignment, cfg: RunConfig) -> list:
    """One monthly count series + detied event list per cluster."""
    if len(assignment.labels) != g.node_count:
        raise ValueError("assignment does not cover all nodes")
    n_months = cfg.n_train_months
    out = []
    for c in range(assignment.k):
        times = _event_times(g, assignment, c, cfg.target)
        rel = times - cfg.train_start
        in_window = rel[(rel >= 0) & (rel < n_months)]
        counts = np.bincount(np.floor(in_window).astype(int), minlength=n_months).astype(float)
        if len(in_window) == 0:
            log.warning("cluster %d has no in-window events; skipped for fitting", c)
        out.append(CommunitySeries(
            cluster_id=c,
            counts=counts,
            events=detie(np.sort(in_window), unit=1.0, t_end=float(n_months)),
            n_members=int(np.sum(assignment.labels == c)),
            n_in_window=len(in_window),
        ))
    return out


def realized_count(g: CitationGraph, assignment: ClusterAssignment, cfg: RunConfig,
                   cluster: int, horizon: int) -> float:
    """Events of the cluster in the target month train_end + horizon."""
    times = _event_times(g, assignment, cluster, cfg.target)
    target_month = cfg.train_start + (cfg.n_train_months - 1) + horizon
    return float(np.sum((times >= target_month) & (times < target_month + 1)))


def adf_report(series_list, significance=0.01) -> dict:
    """Unit-root screen over community series; counts non-rejections."""
    per_cluster = {}
    skipped = []
    for cs in series_list:
        try:
            res = adf_test(cs.counts, significance)
        except ValueError as exc:
            skipped.append({"cluster": cs.cluster_id, "reason": str(exc)})
            continue
        per_cluster[cs.cluster_id] = res
    n_nonreject = sum(1 for r in per_cluster.values() if not r.reject)
    return {
        "significance": significance,
        "clusters_tested": len(per_cluster),
        "non_rejections": n_nonreject,
        "summary": f"{n_nonreject} / {len(per_cluster)}",
        "skipped": skipped,
        "results": {c: asdict(r) for c, r in sorted(per_cluster.items())},
    }


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _hawkes_month_forecast(params: HawkesParams, events: EventSeries, t0: float, horizon: int) -> float:
    """Expected events inside the single month t0 + horizon."""
    total = hawkes_forecast(params, events, t0, float(horizon))
    prev = hawkes_forecast(params, events, t0, float(horizon - 1))
    return total - prev


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute all enabled stages; returns the manifest dictionary."""
    os.makedirs(cfg.out, exist_ok=True)
    report_dir = os.path.join(cfg.out, "report")
    fits_dir = os.path.join(cfg.out, "fits")
    os.makedirs(report_dir, exist_ok=True)
    os.makedirs(fits_dir, exist_ok=True)
    artifacts = {}

    def emit(name, path):
        artifacts[name] = {"path": os.path.relpath(path, cfg.out), "sha256": _sha256(path)}

    # ---- graph ------------------------------------------------------
    try:
        if cfg.graph_path:
            g = load_graph(cfg.graph_path, cfg.graph_format, cfg.times_path)
        else:
            g = generate_synthetic_graph(cfg.synthetic_blocks, cfg.synthetic_nodes_per_block,
                                         cfg.synthetic_p_in, cfg.synthetic_p_out,
                                         seed=cfg.substream_seed("sbm"))
        stats_path = os.path.join(cfg.out, "graph_stats.json")
        with open(stats_path, "w") as fh:
            fh.write(GraphStats.from_graph(g).to_json() + "\n")
        emit("graph_stats", stats_path)
    except Exception as exc:
        raise StageError("graph", exc) from exc

    # ---- walks + embedding -----------------------------------------
    try:
        adj = Adjacency(g.edges, g.node_count, directed=cfg.directed_walks)
        wp = WalkParams(p=cfg.walks.p, q=cfg.walks.q, walk_length=cfg.walks.walk_length,
                        walks_per_node=cfg.walks.walks_per_node, seed=cfg.substream_seed("walks"))
        corpus = generate_walks(adj, wp)
        ep = EmbeddingParams(dimension=cfg.embedding.dimension, window=cfg.embedding.window,
                             negatives=cfg.embedding.negatives, epochs=cfg.embedding.epochs,
                             alpha0=cfg.embedding.alpha0, seed=cfg.substream_seed("sgd"),
                             workers=1 if cfg.deterministic else os.cpu_count() or 1)
        emb = train_embedding(corpus, g.node_count, ep)
        emb_path = os.path.join(cfg.out, "embedding.txt")
        emb.save(emb_path, labels=g.labels)
        emit("embedding", emb_path)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("embed", exc) from exc

    # ---- clustering -------------------------------------------------
    try:
        dend = ward_linkage(emb.vectors, normalize=cfg.normalize_embedding)
        dend_path = os.path.join(cfg.out, "dendrogram.txt")
        dend.save(dend_path)
        emit("dendrogram", dend_path)
        assignment = cut_by_inconsistency(dend, cfg.cut_fraction, cfg.cut_depth)
        assign_path = os.path.join(cfg.out, "assignments.csv")
        assignment.save(assign_path, node_labels=g.labels)
        emit("assignments", assign_path)
        inc = inconsistency(dend, cfg.cut_depth)
        coords_path = os.path.join(report_dir, "dendrogram_coords.csv")
        with open(coords_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["merge", "left", "right", "height", "size", "inconsistency"])
            for i, (left, right, h, size) in enumerate(dend.merges):
                w.writerow([i, int(left), int(right), f"{h:.12g}", int(size), f"{inc[i]:.12g}"])
        emit("dendrogram_coords", coords_path)
    except Exception as exc:
        raise StageError("cluster", exc) from exc

    # ---- series -----------------------------------------------------
    try:
        series_list = build_series(g, assignment, cfg)
        series_path = os.path.join(cfg.out, "series.csv")
        with open(series_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cluster", "month_offset", "count"])
            for cs in series_list:
                for mo, cnt in enumerate(cs.counts):
                    w.writerow([cs.cluster_id, mo, int(cnt)])
        emit("series", series_path)
        adf_path = os.path.join(cfg.out, "adf.json")
        with open(adf_path, "w") as fh:
            json.dump(adf_report(series_list), fh, indent=2, sort_keys=True)
            fh.write("\n")
        emit("adf", adf_path)
    except Exception as exc:
        raise StageError("series", exc) from exc

    # ---- fits + forecasts ------------------------------------------
    t_end = float(cfg.n_train_months)
    fittable = [cs for cs in series_list if cs.n_in_window > 0]
    forecasts = {}
    try:
        if "hawkes" in cfg.models:
            fitted = {}
            for cs in fittable:
                if len(cs.events) < 5:
                    log.warning("cluster %d: too few events for a point-process fit", cs.cluster_id)
                    continue
                fitted[cs.cluster_id] = fit_hawkes(cs.events)
            hp_path = os.path.join(fits_dir, "hawkes.json")
            with open(hp_path, "w") as fh:
                json.dump({str(c): json.loads(p.to_json()) for c, p in sorted(fitted.items())},
                          fh, indent=2, sort_keys=True)
                fh.write("\n")
            emit("fit_hawkes", hp_path)
            for h in cfg.horizons:
                for cs in fittable:
                    if cs.cluster_id not in fitted:
                        continue
                    pred = _hawkes_month_forecast(fitted[cs.cluster_id], cs.events, t_end, h)
                    forecasts.setdefault((h, "hawkes"), []).append(ClusterForecast(
                        cluster_id=cs.cluster_id, model="hawkes", predicted=pred,
                        realized=realized_count(g, assignment, cfg, cs.cluster_id, h),
                        reference=float(cs.counts[-1])))
        if "arima" in cfg.models:
            fitted = {}
            for cs in fittable:
                fitted[cs.cluster_id] = select_order(cs.counts, cfg.arima_max_p,
                                                     cfg.arima_max_d, cfg.arima_max_q)
            ar_path = os.path.join(fits_dir, "arima.json")
            with open(ar_path, "w") as fh:
                json.dump({str(c): json.loads(m.to_json()) for c, m in sorted(fitted.items())},
                          fh, indent=2, sort_keys=True)
                fh.write("\n")
            emit("fit_arima", ar_path)
            for h in cfg.horizons:
                for cs in fittable:
                    path = arima_forecast(fitted[cs.cluster_id], cs.counts, h)
                    forecasts.setdefault((h, "arima"), []).append(ClusterForecast(
                        cluster_id=cs.cluster_id, model="arima", predicted=float(path[-1]),
                        realized=realized_count(g, assignment, cfg, cs.cluster_id, h),
                        reference=float(cs.counts[-1])))
        if "lstm" in cfg.models:
            for cs in fittable:
                lc = LstmConfig(units=cfg.lstm.units, batch_size=cfg.lstm.batch_size,
                                dropout=cfg.lstm.dropout, learning_rate=cfg.lstm.learning_rate,
                                window=cfg.lstm.window, max_epochs=cfg.lstm.max_epochs,
                                seed=cfg.substream_seed(f"dropout/{cs.cluster_id}"))
                model = train_lstm(cs.counts, lc)
                ck_path = os.path.join(fits_dir, f"lstm_{cs.cluster_id}.npz")
                model.save(ck_path)
                emit(f"fit_lstm_{cs.cluster_id}", ck_path)
                hist_path = os.path.join(fits_dir, f"lstm_{cs.cluster_id}_loss.csv")
                with open(hist_path, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["epoch", "train_mse", "val_mse"])
                    for e, (tr, va) in enumerate(zip(model.train_losses, model.val_losses)):
                        w.writerow([e, f"{tr:.12g}", f"{va:.12g}"])
                emit(f"fit_lstm_{cs.cluster_id}_loss", hist_path)
                for h in cfg.horizons:
                    path = lstm_forecast(model, cs.counts, h)
                    forecasts.setdefault((h, "lstm"), []).append(ClusterForecast(
                        cluster_id=cs.cluster_id, model="lstm", predicted=float(path[-1]),
                        realized=realized_count(g, assignment, cfg, cs.cluster_id, h),
                        reference=float(cs.counts[-1])))
    except Exception as exc:
        raise StageError("fit", exc) from exc

    # ---- forecast table + scores -----------------------------------
    try:
        fc_path = os.path.join(cfg.out, "forecasts.csv")
        with open(fc_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["horizon_months", "model", "cluster", "predicted", "realized", "reference"])
            for (h, model), fcs in sorted(forecasts.items()):
                for f in fcs:
                    w.writerow([h, model, f.cluster_id, f"{f.predicted:.12g}",
                                f"{f.realized:.12g}", f"{f.reference:.12g}"])
        emit("forecasts", fc_path)
        scorable = {k: v for k, v in forecasts.items() if any(f.realized != 0 for f in v)}
        for k in set(forecasts) - set(scorable):
            log.warning("all realized values zero for %s; table row skipped", k)
        rows = build_score_table(scorable)
        write_score_csv(rows, os.path.join(cfg.out, "scores.csv"))
        write_score_json(rows, os.path.join(cfg.out, "scores.json"))
        emit("scores_csv", os.path.join(cfg.out, "scores.csv"))
        emit("scores_json", os.path.join(cfg.out, "scores.json"))
        for h in cfg.horizons:
            bars_path = os.path.join(report_dir, f"bars_h{h}.csv")
            with open(bars_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["cluster", "model", "predicted", "realized"])
                for (hh, model), fcs in sorted(forecasts.items()):
                    if hh != h:
                        continue
                    for f in fcs:
                        w.writerow([f.cluster_id, model, f"{f.predicted:.12g}", f"{f.realized:.12g}"])
            emit(f"bars_h{h}", bars_path)
    except Exception as exc:
        raise StageError("score", exc) from exc

    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "deterministic": cfg.deterministic,
        "config": _config_dict(cfg),
        "artifacts": artifacts,
    }
    manifest_path = os.path.join(cfg.out, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["walks"] = asdict(cfg.walks)
    d["embedding"] = asdict(cfg.embedding)
    d["lstm"] = asdict(cfg.lstm)
    d["out"] = os.path.basename(str(cfg.out))  # keep manifests location-independent
    d["horizons"] = list(cfg.horizons)
    d["models"] = list(cfg.models)
    return d
