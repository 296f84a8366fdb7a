"""K-medoids under a precomputed DTW distance matrix.

Alternates nearest-medoid assignment with per-cluster medoid updates until the
medoid set is stable, then applies best-improvement single swaps (PAM style)
until no swap of a medoid for a non-medoid lowers the total cost.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .centers import medoid
from .community import Partition
from .errors import InvalidK

log = logging.getLogger(__name__)

MAX_ITER = 100
SWAP_TOL = 1e-12


@dataclass
class KMedoidsResult:
    medoids: np.ndarray
    partition: Partition
    cost: float
    iterations: int
    cost_history: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.medoids.size)

    @property
    def label_medoids(self) -> np.ndarray:
        """Medoid index for each partition label ``0..k-1``."""
        out = np.empty(self.k, dtype=int)
        out[self.partition.labels[self.medoids]] = self.medoids
        return out

    def write_meta(self, path, curve_ids=None) -> None:
        ids = list(range(self.partition.n)) if curve_ids is None else list(curve_ids)
        meta = {"k": self.k, "cost": float(f"{self.cost:.12g}"), "iterations": self.iterations,
                "medoid_ids": [ids[m] for m in self.medoids.tolist()]}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _assign(D, medoids):
    """Nearest medoid per point; ``medoids`` sorted, so argmin ties go to the lowest index."""
    sub = D[medoids]
    owner = np.argmin(sub, axis=0)
    owner[medoids] = np.arange(medoids.size)
    return owner, float(sub[owner, np.arange(D.shape[0])].sum())


def _farthest_first(D, k):
    chosen = [int(np.argmin(D.sum(axis=1)))]
    nearest = D[chosen[0]].copy()
    for _ in range(1, k):
        nearest[chosen] = -1.0
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, D[nxt])
    return np.array(sorted(chosen))


def k_medoids(dm, k: int, seed: int | None = None, init: str = "farthest",
              max_iter: int = MAX_ITER) -> KMedoidsResult:
    """Cluster with ``k`` medoids.

    ``init="farthest"`` is deterministic (``seed`` unused); ``init="random"``
    draws the starting medoids from ``numpy.random.default_rng(seed)``.
    """
    D = np.asarray(getattr(dm, "entries", dm), dtype=float)
    n = D.shape[0]
    if not 1 <= k <= n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    if init == "farthest":
        medoids = _farthest_first(D, k)
    elif init == "random":
        medoids = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    else:
        raise ValueError(f"unknown init {init!r}")

    owner, cost = _assign(D, medoids)
    history = [cost]
    it = 0
    while it < max_iter:
        it += 1
        new = np.array(sorted(medoid(np.flatnonzero(owner == c), D) for c in range(k)))
        if np.array_equal(new, medoids):
            break
        new_owner, new_cost = _assign(D, new)
        if new_cost > cost:
            break
        medoids, owner, cost = new, new_owner, new_cost
        history.append(cost)

    # swap phase
    while it < max_iter:
        best = (cost - SWAP_TOL, None, None)
        is_med = np.zeros(n, dtype=bool)
        is_med[medoids] = True
        cands = np.flatnonzero(~is_med)
        if cands.size == 0:
            break
        for slot in range(k):
            rest = np.delete(medoids, slot)
            base = D[rest].min(axis=0) if rest.size else np.full(n, np.inf)
            totals = np.minimum(D[cands], base).sum(axis=1)
            h = int(np.argmin(totals))
            if totals[h] < best[0]:
                best = (totals[h], slot, int(cands[h]))
        if best[1] is None:
            break
        it += 1
        medoids = np.sort(np.append(np.delete(medoids, best[1]), best[2]))
        owner, cost = _assign(D, medoids)
        history.append(cost)

    if it >= max_iter:
        log.info("k-medoids stopped at the iteration cap (%d)", max_iter)
    return KMedoidsResult(medoids, Partition(owner), cost, it, history)


def match_cluster_counts(cicd_k: int, dm, seed: int | None = None, **kw) -> KMedoidsResult | None:
    """Baseline run with the same cluster count as a community-detection result.

    Returns ``None`` (with a logged diagnostic) when ``cicd_k < 2``, where the
    validity indices are undefined.
    """
    k = getattr(cicd_k, "k", cicd_k)
    if k < 2:
        log.warning("community detection produced k=%d; skipping the matched baseline run", k)
        return None
    return k_medoids(dm, k, seed, **kw)
