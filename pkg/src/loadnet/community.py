"""Louvain community detection with a resolution knob.

Conventions: sums over the adjacency run over *ordered* vertex pairs, so an
internal edge of weight ``a`` adds ``2a`` to a community's ``sigma_in`` and a
vertex's link weight into community ``c`` is counted as ``k_in = 2 * sum_l A_jl``.
With that reading the printed gain

    dQ = [(S_in + g*k_in)/2m - ((S_tot + k_j)/2m)^2]
         - [S_in/2m - (S_tot/2m)^2 - (k_j/2m)^2]

is, at ``g = 1``, exactly the modularity change from inserting an isolated
vertex ``j`` into ``c``.  ``resolution="literal"`` puts ``g`` on ``k_in`` as
printed; ``resolution="standard"`` puts it on the null-model terms instead.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraph

RESOLUTION_MODES = ("literal", "standard")
MOVE_TOL = 1e-12


@dataclass
class Partition:
    labels: np.ndarray

    def __post_init__(self):
        self.labels = dense_labels(self.labels)

    @property
    def k(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def members(self, c) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def clusters(self) -> list:
        return [self.members(c) for c in range(self.k)]

    def write(self, path, curve_ids=None) -> None:
        ids = list(range(self.n)) if curve_ids is None else list(curve_ids)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["curve_id", "cluster_label"])
            for cid, lab in zip(ids, self.labels.tolist()):
                w.writerow([cid, lab])

    @classmethod
    def read(cls, path) -> tuple["Partition", list]:
        ids, labels = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                ids.append(int(row["curve_id"]))
                labels.append(int(row["cluster_label"]))
        return cls(np.array(labels, dtype=int)), ids


def dense_labels(labels) -> np.ndarray:
    """Relabel to ``0..k-1`` in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=int)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


def delta_q(sigma_in, sigma_tot, k_j, k_j_in, m, gamma=1.0, resolution="literal"):
    """Gain from inserting an isolated vertex into a community."""
    two_m = 2.0 * m
    if resolution == "literal":
        after = (sigma_in + gamma * k_j_in) / two_m - ((sigma_tot + k_j) / two_m) ** 2
        before = sigma_in / two_m - (sigma_tot / two_m) ** 2 - (k_j / two_m) ** 2
    elif resolution == "standard":
        after = (sigma_in + k_j_in) / two_m - gamma * ((sigma_tot + k_j) / two_m) ** 2
        before = sigma_in / two_m - gamma * (sigma_tot / two_m) ** 2 - gamma * (k_j / two_m) ** 2
    else:
        raise ValueError(f"unknown resolution mode {resolution!r}")
    return after - before


class CommunityAggregates:
    """Mutable per-community sums for one level of the Louvain hierarchy.

    ``src``/``dst``/``weight`` list each undirected edge once; ``loops`` holds
    the diagonal entries ``A_ii`` (already in ordered-pair units).
    """

    def __init__(self, n, src, dst, weight, loops=None):
        self.n = n
        self.src, self.dst, self.weight = src, dst, weight
        self.loops = np.zeros(n) if loops is None else np.asarray(loops, dtype=float)
        self.k = self.loops.copy()
        np.add.at(self.k, src, weight)
        np.add.at(self.k, dst, weight)
        self.m = float(self.k.sum()) / 2.0
        # plain lists: the local-move loop indexes these one element at a time
        self.comm = list(range(n))
        self.sigma_tot = self.k.tolist()
        self.sigma_in = self.loops.tolist()
        self.k_list = self.k.tolist()
        self.loop_list = self.loops.tolist()

        both_s = np.concatenate([src, dst])
        both_d = np.concatenate([dst, src])
        both_w = np.concatenate([weight, weight])
        order = np.argsort(both_s, kind="stable")
        indptr = np.concatenate([[0], np.cumsum(np.bincount(both_s, minlength=n))])
        nb, wt = both_d[order].tolist(), both_w[order].tolist()
        self.neighbors = [list(zip(nb[indptr[i]:indptr[i + 1]], wt[indptr[i]:indptr[i + 1]]))
                          for i in range(n)]

    def links(self, j) -> dict:
        """Edge weight from ``j`` to each neighbouring community (one direction)."""
        out = {}
        comm = self.comm
        for v, wt in self.neighbors[j]:
            c = comm[v]
            out[c] = out.get(c, 0.0) + wt
        return out

    def remove(self, j, w_own):
        c = self.comm[j]
        self.sigma_tot[c] -= self.k_list[j]
        self.sigma_in[c] -= 2.0 * w_own + self.loop_list[j]
        self.comm[j] = -1

    def insert(self, j, c, w_c):
        self.sigma_tot[c] += self.k_list[j]
        self.sigma_in[c] += 2.0 * w_c + self.loop_list[j]
        self.comm[j] = c

    def gain(self, j, c, w_c, gamma=1.0, resolution="literal"):
        """Gain for inserting the (currently isolated) vertex ``j`` into ``c``."""
        return delta_q(self.sigma_in[c], self.sigma_tot[c], self.k_list[j], 2.0 * w_c,
                       self.m, gamma, resolution)

    def dense(self) -> np.ndarray:
        A = np.diag(self.loops)
        A[self.src, self.dst] += self.weight
        A[self.dst, self.src] += self.weight
        return A


def _local_moves(agg, gamma, resolution, trace=None, level=0):
    """Repeat vertex sweeps (ascending id) until no move improves by > MOVE_TOL."""
    two_m = 2.0 * agg.m
    literal = resolution == "literal"
    s_in, s_tot, kk = agg.sigma_in, agg.sigma_tot, agg.k_list
    changed = False
    while True:
        moved = False
        for j in range(agg.n):
            own = agg.comm[j]
            w = agg.links(j)
            agg.remove(j, w.get(own, 0.0))
            kj = kk[j]
            gains = {}
            for c in sorted(set(w) | {own}):
                # same bracket form as delta_q, inlined for speed
                a, t, kin = s_in[c], s_tot[c], 2.0 * w.get(c, 0.0)
                if literal:
                    gains[c] = (((a + gamma * kin) / two_m - ((t + kj) / two_m) ** 2)
                                - (a / two_m - (t / two_m) ** 2 - (kj / two_m) ** 2))
                else:
                    gains[c] = (((a + kin) / two_m - gamma * ((t + kj) / two_m) ** 2)
                                - (a / two_m - gamma * (t / two_m) ** 2 - gamma * (kj / two_m) ** 2))
            if trace is not None:
                trace(level, agg, j, gains)
            best, best_gain = own, gains[own]
            for c, g in gains.items():
                if g > best_gain:
                    best, best_gain = c, g
            if best != own and best_gain - gains[own] <= MOVE_TOL:
                best = own
            agg.insert(j, best, w.get(best, 0.0))
            if best != own:
                moved = True
        if not moved:
            return changed
        changed = True


def _coarsen(agg, labels):
    k = int(labels.max()) + 1
    cs, cd = labels[agg.src], labels[agg.dst]
    loops = np.bincount(labels, weights=agg.loops, minlength=k)
    inside = cs == cd
    loops += 2.0 * np.bincount(cs[inside], weights=agg.weight[inside], minlength=k)
    a, b = np.minimum(cs[~inside], cd[~inside]), np.maximum(cs[~inside], cd[~inside])
    key, inv = np.unique(a * k + b, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=agg.weight[~inside], minlength=key.size)
    return CommunityAggregates(k, key // k, key % k, w, loops)


def _edge_quality(n, src, dst, weight, loops, labels, gamma, resolution):
    k = np.zeros(n) if loops is None else np.array(loops, dtype=float)
    np.add.at(k, src, weight)
    np.add.at(k, dst, weight)
    two_m = k.sum()
    if two_m <= 0:
        raise EmptyGraph("graph has no edge weight")
    inside = 2.0 * weight[labels[src] == labels[dst]].sum()
    if loops is not None:
        inside += np.sum(loops)
    tot = np.bincount(labels, weights=k)
    if resolution == "literal":
        return float(gamma * inside / two_m - np.sum((tot / two_m) ** 2))
    return float(inside / two_m - gamma * np.sum((tot / two_m) ** 2))


def quality(g, labels, gamma=1.0, resolution="literal") -> float:
    """Objective maximized by :func:`louvain`; plain modularity at ``gamma = 1``.

    ``g`` is a :class:`~loadnet.netbuild.WeightedGraph` or a dense symmetric
    adjacency matrix (diagonal entries count once, as ``A_ii``).
    """
    labels = dense_labels(labels.labels if isinstance(labels, Partition) else labels)
    if hasattr(g, "src"):
        return _edge_quality(g.n, g.src, g.dst, np.asarray(g.weight, dtype=float),
                             getattr(g, "loops", None), labels, gamma, resolution)
    A = np.asarray(g, dtype=float)
    iu, ju = np.triu_indices(A.shape[0], k=1)
    return _edge_quality(A.shape[0], iu, ju, A[iu, ju], np.diag(A).copy(), labels,
                         gamma, resolution)


def modularity(g, partition) -> float:
    """Weighted modularity of a partition of ``g`` (graph or dense adjacency)."""
    return quality(g, partition, 1.0)


@dataclass
class LouvainResult:
    partition: Partition
    q_history: list
    objective_history: list
    gamma: float
    resolution: str = "literal"
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.partition.k

    @property
    def passes(self) -> int:
        return len(self.q_history)

    def write_meta(self, path) -> None:
        meta = dict(self.meta, gamma=self.gamma, resolution=self.resolution,
                    passes=self.passes, final_q=float(f"{self.q_history[-1]:.12g}"), k=self.k)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def louvain(g, gamma: float = 1.0, resolution: str = "literal", trace=None) -> LouvainResult:
    """Two-phase Louvain: local moves, then merge communities into super-vertices.

    Vertices are scanned in ascending id order and equal-gain targets resolve to
    the lowest community label, so the output is fully deterministic.
    ``q_history`` holds the modularity of the flat partition after each outer
    pass; ``objective_history`` holds the ``gamma``-dependent quantity the moves
    actually increase.  ``trace(level, aggregates, j, gains)`` is called for
    every vertex evaluation, with ``j`` temporarily isolated.
    """
    if resolution not in RESOLUTION_MODES:
        raise ValueError(f"unknown resolution mode {resolution!r}")
    if g.n_edges == 0 or float(np.sum(g.weight)) <= 0:
        raise EmptyGraph("graph has no edge weight; raise lambda")
    agg = CommunityAggregates(g.n, g.src, g.dst, g.weight)
    flat = np.arange(g.n)
    q_hist, obj_hist = [], []
    level = 0
    while True:
        changed = _local_moves(agg, gamma, resolution, trace, level)
        labels = dense_labels(np.array(agg.comm))
        flat = labels[flat]
        q_hist.append(quality(g, flat, 1.0))
        obj_hist.append(quality(g, flat, gamma, resolution))
        if not changed:
            break
        agg = _coarsen(agg, labels)
        level += 1
    return LouvainResult(Partition(flat), q_hist, obj_hist, float(gamma), resolution)
