"""Ward agglomerative clustering and inconsistency-based flat cuts.

Merge records follow the usual convention: leaves are 0..N-1, the
cluster created by merge i gets id N+i. Heights are Euclidean-scale
Ward distances (two singletons merge at their Euclidean distance) and
are monotone non-decreasing toward the root.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class Dendrogram:
    """(N-1, 4) merge table: left id, right id, height, cluster size."""

    merges: np.ndarray
    n_leaves: int

    def __post_init__(self):
        self.merges = np.asarray(self.merges, dtype=np.float64).reshape(-1, 4)
        if self.merges.shape[0] != self.n_leaves - 1:
            raise ValueError("need exactly N-1 merge records")

    def children(self, merge_idx):
        return int(self.merges[merge_idx, 0]), int(self.merges[merge_idx, 1])

    def leaves_under(self, cluster_id):
        """All leaf ids under a cluster id (a leaf id returns itself)."""
        out = []
        stack = [cluster_id]
        while stack:
            c = stack.pop()
            if c < self.n_leaves:
                out.append(c)
            else:
                stack.extend(self.children(c - self.n_leaves))
        return sorted(out)

    def save(self, path):
        with open(path, "w") as fh:
            for left, right, h, size in self.merges:
                fh.write(f"{int(left)} {int(right)} {h:.17g} {int(size)}\n")

    @classmethod
    def load(cls, path):
        rows = []
        with open(path) as fh:
            for line in fh:
                left, right, h, size = line.split()
                rows.append([float(left), float(right), float(h), float(size)])
        return cls(np.array(rows), n_leaves=len(rows) + 1)


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.size and set(np.unique(self.labels)) != set(range(self.k)):
            raise ValueError("labels must be contiguous 0..K-1")

    def save(self, path, node_labels=None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "cluster"])
            for i, c in enumerate(self.labels):
                lab = node_labels[i] if node_labels is not None else str(i)
                w.writerow([lab, int(c)])


def ward_linkage(points, normalize=False) -> Dendrogram:
    """Ward linkage via the Lance-Williams recurrence.

    Ties in the minimum merge distance break toward the lowest
    (left id, right id) pair so the tree is deterministic. With
    normalize=True rows are L2-normalized first (cosine-ish geometry);
    default is raw Euclidean, which is what Ward is defined for.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need an (N >= 2, d) matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    if normalize:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x = x / np.maximum(norms, 1e-12)
    n = x.shape[0]
    sq = np.sum(x**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2 * (x @ x.T)
    d2 = np.maximum(d2, 0.0)  # clip tiny negative rounding
    np.fill_diagonal(d2, np.inf)

    ids = np.arange(n)              # cluster id per active row
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = np.empty((n - 1, 4))
    for step in range(n - 1):
        sub = d2.copy()
        sub[~active] = np.inf
        sub[:, ~active] = np.inf
        m = sub.min()
        ii, jj = np.where(sub == m)
        # candidates appear twice (symmetric); pick lowest (min id, max id)
        best = None
        for a, b in zip(ii, jj):
            if a >= b:
                continue
            key = (min(ids[a], ids[b]), max(ids[a], ids[b]))
            if best is None or key < best[0]:
                best = (key, a, b)
        _, a, b = best
        left, right = sorted((ids[a], ids[b]))
        h = float(np.sqrt(max(m, 0.0)))
        na, nb = sizes[a], sizes[b]
        merges[step] = (left, right, h, na + nb)
        # Lance-Williams Ward update on squared distances, new cluster in row a
        rest = active.copy()
        rest[a] = rest[b] = False
        nk = sizes[rest]
        d2_new = ((na + nk) * d2[a, rest] + (nb + nk) * d2[b, rest] - nk * m) / (na + nb + nk)
        d2[a, rest] = d2_new
        d2[rest, a] = d2_new
        active[b] = False
        ids[a] = n + step
        sizes[a] = na + nb
    return Dendrogram(merges, n_leaves=n)


def inconsistency(d: Dendrogram, depth: int = 2) -> np.ndarray:
    """Per-merge inconsistency coefficient.

    For each merge, collect the heights of all merges within `depth`
    levels below it (the merge itself is level 1) and return
    (own height - mean) / sample std of that set; 0 for singleton sets
    or zero spread.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = d.n_leaves
    heights = d.merges[:, 2]
    out = np.zeros(n - 1)
    for i in range(n - 1):
        window = []
        frontier = [(i, 1)]
        while frontier:
            idx, level = frontier.pop()
            window.append(heights[idx])
            if level < depth:
                for child in d.children(idx):
                    if child >= n:
                        frontier.append((child - n, level + 1))
        if len(window) < 2:
            continue
        w = np.array(window)
        std = w.std(ddof=1)
        if std > 0:
            out[i] = (heights[i] - w.mean()) / std
    return out


def _subtree_max(d: Dendrogram, values: np.ndarray) -> np.ndarray:
    """Max of `values` over each merge's full descendant-merge set."""
    n = d.n_leaves
    out = values.copy()
    for i in range(n - 1):  # children always precede parents
        for child in d.children(i):
            if child >= n:
                out[i] = max(out[i], out[child - n])
    return out


def _label_roots(d: Dendrogram, roots) -> ClusterAssignment:
    n = d.n_leaves
    owner = np.empty(n, dtype=np.int64)
    for r in roots:
        for leaf in d.leaves_under(r):
            owner[leaf] = r
    labels = np.empty(n, dtype=np.int64)
    seen = {}
    for leaf in range(n):
        labels[leaf] = seen.setdefault(owner[leaf], len(seen))
    return ClusterAssignment(labels, k=len(seen))


def cut_by_inconsistency(d: Dendrogram, fraction: float, depth: int = 2) -> ClusterAssignment:
    """Flat cut at threshold = fraction * max inconsistency.

    A cluster is a maximal subtree whose root merge and every merge
    below it have inconsistency <= threshold; leaves not covered by any
    such subtree become singletons.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    inc = inconsistency(d, depth)
    threshold = fraction * inc.max() if inc.size else 0.0
    submax = _subtree_max(d, inc)
    n = d.n_leaves
    roots = []
    stack = [2 * n - 2]  # root cluster id
    while stack:
        c = stack.pop()
        if c < n:
            roots.append(c)
        elif submax[c - n] <= threshold:
            roots.append(c)
        else:
            stack.extend(d.children(c - n))
    return _label_roots(d, roots)


def cut_by_count(d: Dendrogram, k: int) -> ClusterAssignment:
    """Flat cut into exactly k clusters by undoing the last k-1 merges."""
    n = d.n_leaves
    if not 1 <= k <= n:
        raise ValueError("k must be in 1..N")
    removed = set(range(n - 1 - (k - 1), n - 1))
    roots = []
    stack = [2 * n - 2]
    while stack:
        c = stack.pop()
        if c >= n and (c - n) in removed:
            stack.extend(d.children(c - n))
        else:
            roots.append(c)
    return _label_roots(d, roots)
