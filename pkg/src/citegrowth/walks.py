"""Second-order biased random walks with alias sampling.

The next step from node v, having arrived from t, is drawn with
unnormalized weight 1/p toward t, 1 toward common neighbors of t and v,
and 1/q otherwise. p = q = 1 reduces to a first-order uniform walk.

Walk generation is reproducible independent of scheduling: every walk
owns a counter-based Philox stream keyed by (seed, pass, start node).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class WalkParams:
    p: float = 1.0
    q: float = 0.5
    walk_length: int = 80
    walks_per_node: int = 10
    seed: int = 0
    precompute: bool = True  # per-edge alias tables; off = recompute per step

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")


def transition_weight(d_tx: int, p: float, q: float) -> float:
    """Unnormalized transition weight by shortest-path distance d(t, x)."""
    if d_tx == 0:
        return 1.0 / p
    if d_tx == 1:
        return 1.0
    if d_tx == 2:
        return 1.0 / q
    raise ValueError(f"d_tx must be 0, 1 or 2, got {d_tx}")


class AliasTable:
    """O(1) sampling from a discrete distribution (Vose's method)."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D array")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        self.n = w.size
        scaled = w * (self.n / total)
        self.accept = np.ones(self.n)
        self.alias = np.arange(self.n)
        small = [i for i in range(self.n) if scaled[i] < 1.0]
        large = [i for i in range(self.n) if scaled[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.accept[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        # leftovers are 1 up to rounding

    def sample_one(self, u_col: float, u_acc: float) -> int:
        """Draw one index from two uniforms in [0, 1)."""
        i = int(u_col * self.n)
        return i if u_acc < self.accept[i] else int(self.alias[i])

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        idx = gen.integers(0, self.n, size=size)
        keep = gen.random(size) < self.accept[idx]
        return np.where(keep, idx, self.alias[idx])


def build_alias(weights) -> AliasTable:
    return AliasTable(weights)


def _edge_weights(adj, t, v, p, q):
    nbrs = adj.neighbors(v)
    t_nbrs = adj.neighbors(t)
    is_return = nbrs == t
    is_common = np.isin(nbrs, t_nbrs, assume_unique=True)
    return np.where(is_return, 1.0 / p, np.where(is_common, 1.0, 1.0 / q))


def _build_edge_aliases(adj, p, q):
    tables = {}
    for v in range(adj.node_count):
        for t in adj.neighbors(v):
            tables[(int(t), v)] = AliasTable(_edge_weights(adj, int(t), v, p, q))
    return tables


def _walk_stream(seed, pass_idx, start):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 2, pass_idx, start))))


def _one_walk(adj, tables, params, start, gen):
    length = params.walk_length
    walk = np.empty(length, dtype=np.int64)
    walk[0] = start
    nbrs = adj.neighbors(start)
    if len(nbrs) == 0:
        return walk[:1]
    u = gen.random((length - 1, 2))
    walk[1] = nbrs[int(u[0, 0] * len(nbrs))]  # no predecessor: uniform
    for k in range(2, length):
        t, v = int(walk[k - 2]), int(walk[k - 1])
        nbrs = adj.neighbors(v)
        if len(nbrs) == 0:
            return walk[:k]
        if tables is not None:
            tab = tables[(t, v)]
        else:
            tab = AliasTable(_edge_weights(adj, t, v, params.p, params.q))
        walk[k] = nbrs[tab.sample_one(u[k - 1, 0], u[k - 1, 1])]
    return walk


def generate_walks(adj, params: WalkParams) -> list:
    """Walk corpus: walks_per_node passes, start order shuffled per pass.

    Isolated start nodes yield length-1 walks (logged once).
    """
    if adj.node_count == 0:
        raise ValueError("empty graph")
    tables = _build_edge_aliases(adj, params.p, params.q) if params.precompute else None
    isolated = sum(1 for v in range(adj.node_count) if adj.degree(v) == 0)
    if isolated:
        log.info("walk corpus: %d isolated nodes yield length-1 walks", isolated)
    corpus = []
    for pass_idx in range(params.walks_per_node):
        shuffle_gen = np.random.Generator(np.random.Philox(np.random.SeedSequence((params.seed, 1, pass_idx))))
        order = shuffle_gen.permutation(adj.node_count)
        for start in order:
            gen = _walk_stream(params.seed, pass_idx, int(start))
            corpus.append(_one_walk(adj, tables, params, int(start), gen))
    return corpus


def save_corpus(corpus, path):
    with open(path, "w") as fh:
        for walk in corpus:
            fh.write(" ".join(str(int(v)) for v in walk) + "\n")


def load_corpus(path):
    corpus = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                corpus.append(np.array([int(tok) for tok in line.split()], dtype=np.int64))
    return corpus
