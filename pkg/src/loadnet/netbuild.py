"""epsilon-nearest-neighbour network over a DTW distance matrix."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraph, TooFewCurves

EDGE_RULES = ("union", "intersection", "global")
DEFAULT_LAMBDA = 0.5


@dataclass
class WeightedGraph:
    """Undirected weighted graph stored as an upper-triangular edge list."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    curve_ids: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric weight matrix (zero diagonal)."""
        A = np.zeros((self.n, self.n))
        A[self.src, self.dst] = self.weight
        A[self.dst, self.src] = self.weight
        return A

    def edge_set(self) -> set:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def write(self, csv_path, json_path) -> None:
        ids = self.curve_ids or list(range(self.n))
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["src_id", "dst_id", "weight"])
            for s, d, wt in zip(self.src, self.dst, self.weight):
                w.writerow([ids[s], ids[d], f"{wt:.12g}"])
        meta = dict(self.meta, n=self.n, edge_count=self.n_edges)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(_round_floats(meta), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, csv_path, json_path) -> "WeightedGraph":
        with open(json_path, encoding="utf-8") as fh:
            meta = json.load(fh)
        ids = meta.get("curve_ids") or list(range(meta["n"]))
        pos = {str(c): i for i, c in enumerate(ids)}
        src, dst, wt = [], [], []
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                src.append(pos[row["src_id"]])
                dst.append(pos[row["dst_id"]])
                wt.append(float(row["weight"]))
        return cls(meta["n"], np.array(src, dtype=int), np.array(dst, dtype=int),
                   np.array(wt), list(ids), meta)


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def vertex_thresholds(dm, lam: float, rule: str = "union") -> np.ndarray:
    """Per-vertex threshold ``lam * mean_{j != i} d(i, j)``.

    With ``rule="global"`` every vertex gets ``lam`` times the mean over all
    off-diagonal pairs instead.
    """
    D = np.asarray(getattr(dm, "entries", dm), dtype=float)
    n = D.shape[0]
    if n < 2:
        raise TooFewCurves(f"need at least 2 curves, got {n}")
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if rule == "global":
        return np.full(n, lam * D.sum() / (n * (n - 1)))
    return lam * D.sum(axis=1) / (n - 1)


def build_graph(dm, lam: float = DEFAULT_LAMBDA, rule: str = "union") -> WeightedGraph:
    """Connect ``i`` and ``j`` when ``d(i, j)`` is strictly below the threshold.

    ``rule`` picks how the two endpoint thresholds combine: ``"union"`` (below
    either), ``"intersection"`` (below both) or ``"global"`` (one shared
    threshold).  Edge weight is ``1 - d / d_max`` with ``d_max`` the largest
    distance among formed edges, so the longest edge gets weight 0 and is kept.
    """
    if rule not in EDGE_RULES:
        raise ValueError(f"unknown edge rule {rule!r}")
    D = np.asarray(getattr(dm, "entries", dm), dtype=float)
    eps = vertex_thresholds(D, lam, rule)
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    d = D[iu, ju]
    below_i = d < eps[iu]
    below_j = d < eps[ju]
    keep = (below_i & below_j) if rule == "intersection" else (below_i | below_j)
    if not keep.any():
        raise EmptyGraph(f"no edges formed at lambda={lam}; increase lambda")
    src, dst, d = iu[keep], ju[keep], d[keep]
    d_max = float(d.max())
    weight = 1.0 - d / d_max if d_max > 0 else np.ones_like(d)
    ids = list(getattr(dm, "curve_ids", range(n)))
    meta = {"lambda": float(lam), "rule": rule, "d_max": d_max, "curve_ids": ids}
    return WeightedGraph(n, src, dst, weight, ids, meta)
