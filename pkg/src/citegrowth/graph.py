"""Directed citation graph: loading, validation, synthesis.

Node identifiers are dense integers 0..N-1 assigned in first-appearance
order; the external label (e.g. a patent application number) is kept in
``labels`` / ``label_index``. Timestamps are fractional months since
January 1960 (month 0); on disk they are whole "YYYY-MM" months.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field

import numpy as np

EPOCH_YEAR = 1960


class GraphError(ValueError):
    """Raised for malformed graph files or inconsistent graph data."""


def ym_to_months(year: int, month) -> float:
    """Month index of year/month (month may be fractional, 1-based)."""
    return (year - EPOCH_YEAR) * 12 + (month - 1)


def months_to_ym(m: float):
    """Inverse of ym_to_months for whole months."""
    mi = int(round(m))
    return EPOCH_YEAR + mi // 12, mi % 12 + 1


def parse_month(text: str) -> float:
    mm = re.fullmatch(r"(\d{4})-(\d{1,2})", text.strip())
    if not mm:
        raise GraphError(f"bad month {text!r}, expected YYYY-MM")
    year, month = int(mm.group(1)), int(mm.group(2))
    if not 1 <= month <= 12:
        raise GraphError(f"bad month {text!r}: month out of range")
    return float(ym_to_months(year, month))


def format_month(m: float) -> str:
    if abs(m - round(m)) > 1e-9:
        raise GraphError(f"cannot format fractional month {m} as YYYY-MM")
    y, mo = months_to_ym(m)
    return f"{y:04d}-{mo:02d}"


@dataclass
class CitationGraph:
    """Directed citation network with per-node application timestamps.

    edges: (E, 2) int array of (citing, cited) node ids, deduplicated,
    no self-loops, sorted lexicographically. block holds planted
    community labels when the graph came from the synthetic generator.
    """

    node_count: int
    edges: np.ndarray
    app_time: np.ndarray
    labels: list
    label_index: dict = field(default=None, repr=False)
    block: np.ndarray | None = None

    def __post_init__(self):
        if self.label_index is None:
            self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            e = np.unique(e, axis=0)
        self.edges = e
        self.validate()

    def validate(self):
        n = self.node_count
        if n == 0:
            raise GraphError("empty graph")
        if len(self.labels) != n or self.app_time.shape != (n,):
            raise GraphError("node arrays inconsistent with node_count")
        if len(self.label_index) != n:
            raise GraphError("duplicate node labels")
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise GraphError("edge endpoint out of range")
        if self.edges.size and np.any(self.edges[:, 0] == self.edges[:, 1]):
            raise GraphError("self-loop survived load")
        if not np.all(np.isfinite(self.app_time)):
            raise GraphError("missing or non-finite timestamp")

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]


@dataclass
class GraphStats:
    node_count: int
    edge_count: int
    t_min: float
    t_max: float

    @classmethod
    def from_graph(cls, g: CitationGraph) -> "GraphStats":
        return cls(g.node_count, g.edge_count, float(g.app_time.min()), float(g.app_time.max()))

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def _finalize_edges(raw_edges):
    """Drop self-loops, deduplicate, sort. Returns (E,2) int64 array."""
    if not raw_edges:
        return np.empty((0, 2), dtype=np.int64)
    e = np.asarray(raw_edges, dtype=np.int64)
    e = e[e[:, 0] != e[:, 1]]
    if e.size:
        e = np.unique(e, axis=0)
    return e.reshape(-1, 2)


def _build(labels, times, raw_edges, block=None):
    label_index = {lab: i for i, lab in enumerate(labels)}
    return CitationGraph(
        node_count=len(labels),
        edges=_finalize_edges(raw_edges),
        app_time=np.asarray(times, dtype=np.float64),
        labels=list(labels),
        label_index=label_index,
        block=block,
    )


_DOT_NODE = re.compile(r'^\s*"?([\w.\-]+)"?\s*\[\s*time\s*=\s*"([^"]+)"\s*\]\s*;?\s*$')
_DOT_EDGE = re.compile(r'^\s*"?([\w.\-]+)"?\s*->\s*"?([\w.\-]+)"?\s*;?\s*$')


def load_dot(path) -> CitationGraph:
    """Parse the DOT subset: digraph header, `node [time="YYYY-MM"];`
    statements and `a -> b;` edges."""
    labels, times, raw_edges = [], [], []
    index = {}
    with open(path) as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("//") or s.startswith("digraph") or s in ("{", "}"):
            continue
        m = _DOT_NODE.match(s)
        if m:
            lab = m.group(1)
            if lab in index:
                raise GraphError(f"{path}:{lineno}: duplicate node {lab!r}")
            try:
                t = parse_month(m.group(2))
            except GraphError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
            index[lab] = len(labels)
            labels.append(lab)
            times.append(t)
            continue
        m = _DOT_EDGE.match(s)
        if m:
            for lab in (m.group(1), m.group(2)):
                if lab not in index:
                    raise GraphError(f"{path}:{lineno}: edge endpoint {lab!r} has no node declaration (missing timestamp)")
            raw_edges.append((index[m.group(1)], index[m.group(2)]))
            continue
        raise GraphError(f"{path}:{lineno}: cannot parse {s!r}")
    if not labels:
        raise GraphError(f"{path}: empty graph")
    return _build(labels, times, raw_edges)


def _default_times_path(edges_path):
    import os

    stem, _ = os.path.splitext(str(edges_path))
    return stem + ".times.csv"


def load_edge_csv(edges_path, times_path=None) -> CitationGraph:
    """Load edge CSV (header from,to) plus timestamp CSV (header
    label,year,month). Node ids follow timestamp-file row order."""
    if times_path is None:
        times_path = _default_times_path(edges_path)
    labels, times = [], []
    index = {}
    with open(times_path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if [c.strip().lower() for c in row[:3]] != ["label", "year", "month"]:
                    raise GraphError(f"{times_path}:1: expected header label,year,month")
                continue
            if not row:
                continue
            if len(row) < 3:
                raise GraphError(f"{times_path}:{lineno}: expected 3 columns")
            lab = row[0].strip()
            if lab in index:
                raise GraphError(f"{times_path}:{lineno}: duplicate node {lab!r}")
            try:
                t = ym_to_months(int(row[1]), float(row[2]))
            except ValueError:
                raise GraphError(f"{times_path}:{lineno}: bad year/month") from None
            index[lab] = len(labels)
            labels.append(lab)
            times.append(t)
    if not labels:
        raise GraphError(f"{times_path}: empty graph")
    raw_edges = []
    with open(edges_path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if [c.strip().lower() for c in row[:2]] != ["from", "to"]:
                    raise GraphError(f"{edges_path}:1: expected header from,to")
                continue
            if not row:
                continue
            if len(row) < 2:
                raise GraphError(f"{edges_path}:{lineno}: expected 2 columns")
            a, b = row[0].strip(), row[1].strip()
            for lab in (a, b):
                if lab not in index:
                    raise GraphError(f"{edges_path}:{lineno}: dangling endpoint {lab!r}")
            raw_edges.append((index[a], index[b]))
    return _build(labels, times, raw_edges)


def load_graph(path, format: str, times_path=None) -> CitationGraph:
    if format == "dot":
        return load_dot(path)
    if format == "edge-csv":
        return load_edge_csv(path, times_path)
    raise ValueError(f"unknown graph format {format!r}")


def write_graph(g: CitationGraph, path, format: str, times_path=None):
    """Write a graph back out; round-trips through load_graph."""
    if format == "dot":
        with open(path, "w") as fh:
            fh.write("digraph citations {\n")
            for i, lab in enumerate(g.labels):
                fh.write(f'  "{lab}" [time="{format_month(g.app_time[i])}"];\n')
            for a, b in g.edges:
                fh.write(f'  "{g.labels[a]}" -> "{g.labels[b]}";\n')
            fh.write("}\n")
    elif format == "edge-csv":
        if times_path is None:
            times_path = _default_times_path(path)
        with open(times_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "year", "month"])
            for i, lab in enumerate(g.labels):
                t = g.app_time[i]
                year = EPOCH_YEAR + int(t // 12)
                month = t - 12 * (int(t // 12)) + 1
                month = int(month) if abs(month - round(month)) < 1e-9 else month
                w.writerow([lab, year, month])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["from", "to"])
            for a, b in g.edges:
                w.writerow([g.labels[a], g.labels[b]])
    else:
        raise ValueError(f"unknown graph format {format!r}")


class Adjacency:
    """Undirected, unweighted view of a citation graph.

    Immutable after construction: per-node sorted neighbor arrays, safe
    for concurrent reads. With directed=True the original edge
    orientation is kept (config escape hatch; walks default undirected).
    """

    def __init__(self, edges, node_count, directed=False):
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if not directed and e.size:
            e = np.concatenate([e, e[:, ::-1]], axis=0)
            e = np.unique(e, axis=0)
        self.node_count = node_count
        self.directed = directed
        self._nbrs = [np.empty(0, dtype=np.int64) for _ in range(node_count)]
        if e.size:
            order = np.lexsort((e[:, 1], e[:, 0]))
            e = e[order]
            starts = np.searchsorted(e[:, 0], np.arange(node_count))
            ends = np.searchsorted(e[:, 0], np.arange(node_count), side="right")
            for v in range(node_count):
                self._nbrs[v] = np.unique(e[starts[v]:ends[v], 1])

    def neighbors(self, v) -> np.ndarray:
        return self._nbrs[v]

    def degree(self, v) -> int:
        return len(self._nbrs[v])

    def has_edge(self, u, v) -> bool:
        nb = self._nbrs[u]
        i = np.searchsorted(nb, v)
        return i < len(nb) and nb[i] == v


def as_undirected_adjacency(g: CitationGraph) -> Adjacency:
    return Adjacency(g.edges, g.node_count, directed=False)


def generate_synthetic_graph(blocks, nodes_per_block, p_in, p_out, seed=0,
                             t_start=None, t_end=None) -> CitationGraph:
    """Stochastic-block-model stand-in for a real citation database.

    Undirected pair sampling; each sampled pair is oriented from the
    later-filed node to the earlier one (a citation points backwards in
    time). Timestamps are whole months drawn uniformly over
    [t_start, t_end] (defaults: 1985-01 .. 2006-12). Planted block
    labels are kept on the returned graph as ground truth.
    """
    if not (0 <= p_out < p_in <= 1):
        raise ValueError("require 0 <= p_out < p_in <= 1")
    if blocks < 1 or nodes_per_block < 1:
        raise ValueError("blocks and nodes_per_block must be positive")
    if t_start is None:
        t_start = ym_to_months(1985, 1)
    if t_end is None:
        t_end = ym_to_months(2006, 12)
    n = blocks * nodes_per_block
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(blocks), nodes_per_block)
    times = rng.integers(int(t_start), int(t_end) + 1, size=n).astype(np.float64)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    a, b = iu[keep], ju[keep]
    # cite from the newer application to the older; ties keep (a, b)
    swap = times[a] < times[b]
    frm = np.where(swap, b, a)
    to = np.where(swap, a, b)
    labels = [f"P{i:06d}" for i in range(n)]
    return _build(labels, times, list(zip(frm.tolist(), to.tolist())), block=block)
