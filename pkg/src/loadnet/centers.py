"""Cluster representatives: medoids and DTW barycenter averaging (DBA).

DBA alignment always uses the squared per-cell cost, whatever cost the
distance matrix was built with.  The arithmetic-mean update minimizes the sum
of squared aligned differences for fixed alignments, and re-aligning can only
lower that sum further, so ``sum_m DTW_sq(center, member)`` never increases
between iterations.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dtw import DEFAULT_WINDOW, align_batch
from .errors import EmptyCluster

DBA_TOL = 1e-6
DBA_MAX_ITER = 30


@dataclass
class TypicalLoadProfile:
    cluster_label: int
    values: np.ndarray
    iterations: int = 0
    cost: float = 0.0
    cost_history: list = field(default_factory=list)


def medoid(cluster, dm) -> int:
    """Member with the smallest summed distance to the other members (ties: lowest index)."""
    D = np.asarray(getattr(dm, "entries", dm))
    members = np.sort(np.asarray(cluster, dtype=int))
    if members.size == 0:
        raise EmptyCluster("medoid of an empty cluster")
    totals = D[np.ix_(members, members)].sum(axis=0)
    return int(members[np.argmin(totals)])


def dba_many(curves, labels, inits, w: int = DEFAULT_WINDOW, tol: float = DBA_TOL,
             max_iter: int = DBA_MAX_ITER) -> list[TypicalLoadProfile]:
    """Run DBA for every cluster at once.

    All members are aligned to their own cluster's current center in a single
    batched DTW call.  A cluster whose center moved by less than ``tol``
    (max-abs) is frozen, so each cluster follows exactly the trajectory it would
    have on its own.

    Parameters
    ----------
    curves : (N, n) array
    labels : (N,) int array with values ``0..k-1``
    inits : (k, n) array of starting centers
    """
    X = np.asarray(curves, dtype=float)
    labels = np.asarray(labels, dtype=int)
    centers = np.array(inits, dtype=float)
    k, n = centers.shape
    sizes = np.bincount(labels, minlength=k)
    if np.any(sizes == 0):
        raise EmptyCluster(f"cluster(s) {np.flatnonzero(sizes == 0).tolist()} have no members")

    active = np.ones(k, dtype=bool)      # aligned this round
    stopping = np.zeros(k, dtype=bool)   # converged; one cost-only round left
    iterations = np.zeros(k, dtype=int)
    history = [[] for _ in range(k)]
    while active.any():
        sel = np.flatnonzero(active[labels])
        lab = labels[sel]
        dist, pair, ii, jj = align_batch(centers[lab], X[sel], w, "squared")
        cost = np.bincount(lab, weights=dist, minlength=k)
        for c in np.flatnonzero(active):
            history[c].append(float(cost[c]))

        upd = active & ~stopping & (iterations < max_iter)
        active = upd
        if not upd.any():
            break
        keep = upd[lab[pair]]
        rows, slots = lab[pair][keep], ii[keep]
        # deviations from the current center: identical members give exactly 0
        vals = X[sel[pair[keep]], jj[keep]] - centers[rows, slots]
        sums = np.zeros((k, n))
        counts = np.zeros((k, n))
        np.add.at(sums, (rows, slots), vals)
        np.add.at(counts, (rows, slots), 1.0)
        step = sums[upd] / counts[upd]
        stopping[upd] = np.abs(step).max(axis=1) < tol
        centers[upd] = centers[upd] + step
        iterations[upd] += 1

    return [TypicalLoadProfile(c, centers[c], int(iterations[c]), history[c][-1], history[c])
            for c in range(k)]


def dba(curves, init, w: int = DEFAULT_WINDOW, tol: float = DBA_TOL,
        max_iter: int = DBA_MAX_ITER, label: int = 0) -> TypicalLoadProfile:
    """DBA for a single cluster."""
    X = np.atleast_2d(np.asarray(curves, dtype=float))
    init = np.asarray(init, dtype=float)
    if init.shape != (X.shape[1],):
        raise ValueError(f"init has shape {init.shape}, expected ({X.shape[1]},)")
    tlp = dba_many(X, np.zeros(len(X), dtype=int), init[None], w, tol, max_iter)[0]
    tlp.cluster_label = label
    return tlp


def extract_tlps(partition, curves, dm, w: int = DEFAULT_WINDOW, **kw) -> list[TypicalLoadProfile]:
    """Medoid-initialized DBA profile for every cluster of ``partition``."""
    labels = np.asarray(getattr(partition, "labels", partition), dtype=int)
    X = np.asarray(curves, dtype=float)
    k = int(labels.max()) + 1
    seeds = [medoid(np.flatnonzero(labels == c), dm) for c in range(k)]
    return dba_many(X, labels, X[seeds], w, **kw)


def tlp_matrix(tlps) -> np.ndarray:
    return np.vstack([t.values for t in tlps])


def write_tlps(tlps, path) -> None:
    n = len(tlps[0].values) if tlps else 96
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["cluster_label"] + [f"t{t}" for t in range(n)])
        for t in tlps:
            wr.writerow([t.cluster_label] + [f"{v:.12g}" for v in t.values])


def read_tlps(path) -> list[TypicalLoadProfile]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            out.append(TypicalLoadProfile(int(row[0]), np.array([float(v) for v in row[1:]])))
    return out
