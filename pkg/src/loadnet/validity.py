"""Internal cluster validity indices under banded DTW.

Lower is better for DB, S_Dbw and COP; higher is better for VCN and SF.
``centers`` is a ``(k, n)`` array whose row ``c`` represents cluster ``c``
(DBA profiles or medoid curves).  The global data centroid used by S_Dbw and
SF is the elementwise mean of all curves.
"""
from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .dtw import DEFAULT_WINDOW, cross_distances, dtw_batch
from .errors import (CoincidentCenters, DataError, DegenerateDensity,
                     UndefinedForSingleCluster)

SF_MODES = ("difference", "sum")
DENSITY_MODES = ("published", "literal")
REPORT_FIELDS = ("k", "center_mode", "db", "vcn", "s_dbw", "sf", "cop", "mean_entropy")


def _prep(labels, centers, curves):
    labels = np.asarray(getattr(labels, "labels", labels), dtype=int)
    X = np.asarray(curves, dtype=float)
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    if C.shape[0] != labels.max() + 1:
        raise ValueError(f"{C.shape[0]} centers for {labels.max() + 1} clusters")
    return labels, C, X


def _own_distances(labels, C, X, w, cost):
    return dtw_batch(C[labels], X, w, cost)


def _mean_per_cluster(values, labels, k):
    return np.bincount(labels, weights=values, minlength=k) / np.bincount(labels, minlength=k)


def _need_two(k, name):
    if k < 2:
        raise UndefinedForSingleCluster(f"{name} needs at least 2 clusters")


def davies_bouldin(labels, centers, curves, w: int = DEFAULT_WINDOW, cost: str = "abs") -> float:
    labels, C, X = _prep(labels, centers, curves)
    k = C.shape[0]
    _need_two(k, "DB")
    scatter = _mean_per_cluster(_own_distances(labels, C, X, w, cost), labels, k)
    between = cross_distances(C, C, w, cost)
    off = ~np.eye(k, dtype=bool)
    if np.any(between[off] <= 0):
        raise CoincidentCenters("two cluster centers are at DTW distance 0")
    np.fill_diagonal(between, np.inf)  # i == j contributes 0, never the max of non-negatives
    ratio = (scatter[:, None] + scatter[None, :]) / between
    return float(ratio.max(axis=1).mean())


def vcn(labels, centers, curves, w: int = DEFAULT_WINDOW, cost: str = "abs") -> float:
    """Mean over clusters of ``(bd - wd) / max(bd, wd)``.

    ``wd`` is the mean member distance to the own center, ``bd`` the smallest
    mean member distance to any *other* center.
    """
    labels, C, X = _prep(labels, centers, curves)
    k = C.shape[0]
    _need_two(k, "VCN")
    to_all = cross_distances(X, C, w, cost)
    sizes = np.bincount(labels, minlength=k)
    mean_to = np.zeros((k, k))
    np.add.at(mean_to, labels, to_all)
    mean_to /= sizes[:, None]
    wd = np.diag(mean_to).copy()
    np.fill_diagonal(mean_to, np.inf)
    bd = mean_to.min(axis=1)
    top = np.maximum(bd, wd)
    terms = np.divide(bd - wd, top, out=np.zeros(k), where=top > 0)
    return float(terms.mean())


def s_dbw(labels, centers, curves, w: int = DEFAULT_WINDOW, cost: str = "abs",
          density: str = "published") -> float:
    """Scattering plus inter-cluster density.

    ``density="published"`` counts points within ``stdev`` of a reference
    (f = 1 when d <= stdev); ``"literal"`` counts points farther than ``stdev``.
    """
    if density not in DENSITY_MODES:
        raise ValueError(f"unknown density mode {density!r}")
    labels, C, X = _prep(labels, centers, curves)
    k = C.shape[0]
    _need_two(k, "S_Dbw")
    centroid = X.mean(axis=0)
    sigma_D = float(np.mean(dtw_batch(np.broadcast_to(centroid, X.shape), X, w, cost) ** 2))
    own = _own_distances(labels, C, X, w, cost)
    sigma_c = _mean_per_cluster(own ** 2, labels, k)
    scat = sigma_c.mean() / sigma_D if sigma_D > 0 else 0.0
    stdev = math.sqrt(sigma_c.sum()) / k

    def f(d):
        return (d <= stdev) if density == "published" else (d > stdev)

    dens_center = np.bincount(labels, weights=f(own).astype(float), minlength=k)
    if not dens_center.any():
        raise DegenerateDensity("no cluster has any density at its center")

    # every (pair i<j, member of c_i or c_j) combination in one batched DTW call
    pi, pj = np.triu_indices(k, k=1)
    members = [np.flatnonzero(labels == c) for c in range(k)]
    rows, pts = [], []
    for p, (i, j) in enumerate(zip(pi, pj)):
        idx = np.concatenate([members[i], members[j]])
        rows.append(np.full(idx.size, p))
        pts.append(idx)
    rows = np.concatenate(rows)
    pts = np.concatenate(pts)
    mids = (C[pi] + C[pj]) / 2.0
    d = dtw_batch(mids[rows], X[pts], w, cost)
    num = np.bincount(rows, weights=f(d).astype(float), minlength=pi.size)
    den = np.maximum(dens_center[pi], dens_center[pj])
    if np.any((den == 0) & (num > 0)):
        raise DegenerateDensity("a cluster pair has zero density at both centers")
    terms = np.divide(num, den, out=np.zeros(pi.size), where=den > 0)
    total = 2.0 * terms.sum()
    return float(scat + total / (k * (k - 1)))


def score_function(labels, centers, curves, w: int = DEFAULT_WINDOW, cost: str = "abs",
                   exponent: str = "difference") -> float:
    """``1 - exp(-exp(bcd - wcd))``; ``exponent="sum"`` uses ``bcd + wcd``."""
    if exponent not in SF_MODES:
        raise ValueError(f"unknown SF mode {exponent!r}")
    labels, C, X = _prep(labels, centers, curves)
    k = C.shape[0]
    n = X.shape[0]
    sizes = np.bincount(labels, minlength=k)
    centroid = X.mean(axis=0)
    to_centroid = dtw_batch(C, np.broadcast_to(centroid, C.shape), w, cost)
    bcd = float(np.sum(to_centroid * sizes) / (n * k))
    wcd = float(np.sum(_mean_per_cluster(_own_distances(labels, C, X, w, cost), labels, k)))
    e = bcd - wcd if exponent == "difference" else bcd + wcd
    with np.errstate(over="ignore"):
        return float(1.0 - np.exp(-np.exp(e)))


def cop(labels, centers, curves, dm, w: int = DEFAULT_WINDOW, cost: str = "abs") -> float:
    """Size-weighted ratio of intra-cluster spread to the nearest outsider.

    The outsider distance for cluster ``c`` is ``min_{m not in c} max_{l in c} d(m, l)``.
    """
    labels, C, X = _prep(labels, centers, curves)
    D = np.asarray(getattr(dm, "entries", dm), dtype=float)
    k = C.shape[0]
    if k < 2:
        raise UndefinedForSingleCluster("COP needs points outside each cluster")
    intra = _mean_per_cluster(_own_distances(labels, C, X, w, cost), labels, k)
    sizes = np.bincount(labels, minlength=k)
    total = 0.0
    for c in range(k):
        inside = labels == c
        far = D[np.ix_(~inside, inside)].max(axis=1).min()
        if intra[c] == 0:
            continue
        total += sizes[c] * (intra[c] / far if far > 0 else np.inf)
    return float(total / labels.size)


def consumer_entropy(labels, households) -> tuple[dict, float]:
    """Per-household Shannon entropy (natural log) of cluster membership, and its mean."""
    labels = np.asarray(getattr(labels, "labels", labels))
    days = defaultdict(list)
    for hid, lab in zip(households, labels.tolist()):
        days[hid].append(lab)
    out = {}
    for hid in sorted(days):
        counts = np.array(list(Counter(days[hid]).values()), dtype=float)
        p = counts / counts.sum()
        out[hid] = float(-np.sum(p * np.log(p))) + 0.0
    mean = float(np.mean(list(out.values()))) if out else 0.0
    return out, mean


@dataclass
class ValidityReport:
    k: int
    center_mode: str
    db: float = math.nan
    vcn: float = math.nan
    s_dbw: float = math.nan
    sf: float = math.nan
    cop: float = math.nan
    mean_entropy: float = math.nan
    notes: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in REPORT_FIELDS[2:]:
            v = d[key]
            d[key] = None if v is None or not math.isfinite(v) else float(f"{v:.12g}")
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)

    def csv_row(self) -> list:
        d = self.as_dict()
        return ["" if d[f] is None else (f"{d[f]:.12g}" if isinstance(d[f], float) else d[f])
                for f in REPORT_FIELDS]


def evaluate(labels, centers, curves, dm, households=None, center_mode: str = "averaged",
             w: int = DEFAULT_WINDOW, cost: str = "abs", sf_mode: str = "difference",
             density: str = "published") -> ValidityReport:
    """All indices for one partition; an index that is undefined is NaN with a note."""
    labels = np.asarray(getattr(labels, "labels", labels), dtype=int)
    rep = ValidityReport(int(labels.max()) + 1, center_mode)
    jobs = {
        "db": lambda: davies_bouldin(labels, centers, curves, w, cost),
        "vcn": lambda: vcn(labels, centers, curves, w, cost),
        "s_dbw": lambda: s_dbw(labels, centers, curves, w, cost, density),
        "sf": lambda: score_function(labels, centers, curves, w, cost, sf_mode),
        "cop": lambda: cop(labels, centers, curves, dm, w, cost),
    }
    for name, fn in jobs.items():
        try:
            setattr(rep, name, fn())
        except DataError as exc:
            rep.notes[name] = str(exc)
    if households is not None:
        rep.mean_entropy = consumer_entropy(labels, households)[1]
    return rep
