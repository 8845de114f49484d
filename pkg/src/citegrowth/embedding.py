"""Skip-gram node embeddings with negative sampling.

For every center position in a walk, context positions within the
window form positive pairs; k noise nodes per positive are drawn from
the unigram^(3/4) distribution. SGD step size decays linearly from the
initial value to initial/1e4 over the total pair count.

Two execution modes: deterministic single-threaded (default, bit
reproducible) and lock-free multithreaded (last-writer-wins on matrix
rows; approximate, loss-decrease only is guaranteed).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .walks import AliasTable

_CLAMP = 30.0  # |dot| cap before the logistic; avoids overflow


@dataclass
class EmbeddingParams:
    dimension: int = 128
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    alpha0: float = 0.025  # initial SGD step size
    seed: int = 0
    workers: int = 1  # >1 enables the approximate parallel mode

    def __post_init__(self):
        if self.dimension < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dimension, window and negatives must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class Embedding:
    """Input-representation matrix, row order = node id order."""

    vectors: np.ndarray
    loss_per_epoch: list = field(default_factory=list)

    @property
    def dimension(self):
        return self.vectors.shape[1]

    def save(self, path, labels=None):
        n, d = self.vectors.shape
        with open(path, "w") as fh:
            fh.write(f"{n} {d}\n")
            for i in range(n):
                lab = labels[i] if labels is not None else str(i)
                fh.write(lab + " " + " ".join(f"{x:.17g}" for x in self.vectors[i]) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            n, d = (int(tok) for tok in fh.readline().split())
            vecs = np.empty((n, d))
            labels = []
            for i in range(n):
                parts = fh.readline().split()
                labels.append(parts[0])
                vecs[i] = [float(x) for x in parts[1:]]
        emb = cls(vecs)
        emb.labels = labels
        return emb


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_CLAMP, _CLAMP)))


def pair_loss(u_vec, v_vec, negatives) -> float:
    """-log sigma(u.v) - sum_i log sigma(-u.n_i)."""
    u = np.asarray(u_vec, dtype=np.float64)
    loss = -np.log(_sigmoid(float(np.dot(u, v_vec))))
    for nvec in negatives:
        loss -= np.log(_sigmoid(-float(np.dot(u, nvec))))
    return float(loss)


def pair_gradients(u_vec, v_vec, negatives):
    """Analytic gradients of pair_loss wrt (u, v, each negative)."""
    u = np.asarray(u_vec, dtype=np.float64)
    gpos = _sigmoid(float(np.dot(u, v_vec))) - 1.0
    du = gpos * np.asarray(v_vec, dtype=np.float64)
    dv = gpos * u
    dnegs = []
    for nvec in negatives:
        gneg = _sigmoid(float(np.dot(u, nvec)))
        du = du + gneg * np.asarray(nvec, dtype=np.float64)
        dnegs.append(gneg * u)
    return du, dv, dnegs


def gradient_check(dimension=8, negatives=3, seed=0, h=1e-5) -> float:
    """Max relative error of pair_gradients vs central differences."""
    gen = np.random.default_rng(seed)
    u = gen.normal(scale=0.5, size=dimension)
    v = gen.normal(scale=0.5, size=dimension)
    negs = [gen.normal(scale=0.5, size=dimension) for _ in range(negatives)]
    du, dv, dnegs = pair_gradients(u, v, negs)

    def num_grad(vec):
        # perturb `vec` in place; pair_loss re-reads it through the closure
        g = np.empty_like(vec)
        base = vec.copy()
        for i in range(len(vec)):
            vec[i] = base[i] + h
            fp = pair_loss(u, v, negs)
            vec[i] = base[i] - h
            fm = pair_loss(u, v, negs)
            vec[i] = base[i]
            g[i] = (fp - fm) / (2 * h)
        return g

    max_rel = 0.0

    def compare(analytic, numeric):
        nonlocal max_rel
        denom = np.maximum(np.abs(analytic) + np.abs(numeric), 1e-8)
        max_rel = max(max_rel, float(np.max(np.abs(analytic - numeric) / denom)))

    compare(du, num_grad(u))
    compare(dv, num_grad(v))
    for j in range(negatives):
        compare(dnegs[j], num_grad(negs[j]))
    return max_rel


def unigram_table(corpus, n_nodes, power=0.75) -> AliasTable:
    counts = np.zeros(n_nodes)
    for walk in corpus:
        np.add.at(counts, walk, 1.0)
    return AliasTable(counts**power)


def init_matrices(n_nodes, dimension, seed):
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 10))))
    w_in = (gen.random((n_nodes, dimension)) - 0.5) / dimension
    w_out = np.zeros((n_nodes, dimension))
    return w_in, w_out


def _train_span(corpus, w_in, w_out, table, params, gen, pair_counter, total_pairs):
    """One pass over `corpus` (a list of walks). Returns (loss_sum, n_terms).

    Each center position is processed as one SGD step covering all its
    context pairs; the center row update is applied once per position,
    matching word2vec's accumulate-then-write scheme.
    """
    w = params.window
    k = params.negatives
    a0 = params.alpha0
    loss_sum = 0.0
    n_terms = 0
    done = pair_counter[0]
    for walk in corpus:
        L = len(walk)
        if L < 2:
            continue
        for i in range(L):
            ctx = np.concatenate([walk[max(0, i - w):i], walk[i + 1:i + w + 1]])
            C = len(ctx)
            if C == 0:
                continue
            negs = table.sample(gen, C * k)
            targets = np.concatenate([ctx, negs])
            lr = a0 * max(1e-4, 1.0 - done / total_pairs)
            u = w_in[walk[i]]
            V = w_out[targets]
            dots = np.clip(V @ u, -_CLAMP, _CLAMP)
            sig = 1.0 / (1.0 + np.exp(-dots))
            g = -sig
            g[:C] += 1.0  # label 1 for true contexts
            loss_sum += -np.sum(np.log(np.maximum(sig[:C], 1e-12)))
            loss_sum += -np.sum(np.log(np.maximum(1.0 - sig[C:], 1e-12)))
            n_terms += len(targets)
            du = g @ V
            np.add.at(w_out, targets, (lr * g)[:, None] * u[None, :])
            w_in[walk[i]] += lr * du
            done += C
    pair_counter[0] = done
    return loss_sum, n_terms


def train_embedding(corpus, n_nodes, params: EmbeddingParams) -> Embedding:
    """Train skip-gram on a walk corpus; returns the input matrix.

    loss_per_epoch on the result holds the mean per-term loss of each
    epoch (running average over positive and negative terms).
    """
    if not corpus:
        raise ValueError("empty corpus")
    w_in, w_out = init_matrices(n_nodes, params.dimension, params.seed)
    emb = Embedding(w_in)
    if params.epochs == 0:
        return emb
    table = unigram_table(corpus, n_nodes)
    total_pairs = params.epochs * sum(
        sum(min(i, params.window) + min(len(wk) - 1 - i, params.window) for i in range(len(wk)))
        for wk in corpus if len(wk) > 1
    )
    pair_counter = [0]
    for epoch in range(params.epochs):
        if params.workers <= 1:
            gen = np.random.Generator(np.random.Philox(np.random.SeedSequence((params.seed, 11, epoch))))
            loss_sum, n_terms = _train_span(corpus, w_in, w_out, table, params, gen, pair_counter, total_pairs)
        else:
            chunks = [corpus[j::params.workers] for j in range(params.workers)]
            with ThreadPoolExecutor(max_workers=params.workers) as ex:
                futs = [
                    ex.submit(
                        _train_span, chunk, w_in, w_out, table, params,
                        np.random.Generator(np.random.Philox(np.random.SeedSequence((params.seed, 11, epoch, j)))),
                        [pair_counter[0]], total_pairs,
                    )
                    for j, chunk in enumerate(chunks)
                ]
                results = [f.result() for f in futs]
            pair_counter[0] += sum(
                sum(min(i, params.window) + min(len(wk) - 1 - i, params.window) for i in range(len(wk)))
                for wk in corpus if len(wk) > 1
            )
            loss_sum = sum(r[0] for r in results)
            n_terms = sum(r[1] for r in results)
        emb.loss_per_epoch.append(loss_sum / max(n_terms, 1))
    return emb
