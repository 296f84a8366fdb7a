"""Resolution sweep and the multi-layer typical-load-profile directory.

Each layer covers a half-open cluster-count interval ``[lo, hi)`` and holds the
sweep point with the best VCN whose cluster count falls inside it.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .centers import extract_tlps, tlp_matrix, write_tlps
from .community import Partition, louvain
from .dtw import DEFAULT_WINDOW, dtw_batch
from .errors import EmptyDirectory
from .validity import vcn

log = logging.getLogger(__name__)

DEFAULT_GRID = (1.00, 0.70, 0.01)
DEFAULT_INTERVALS = ((1, 10), (10, 100), (100, math.inf))


def gamma_grid(start: float = 1.00, end: float = 0.70, step: float = 0.01) -> list[float]:
    """Descending grid ``start, start - step, ..., end`` (inclusive, rounded to 10 decimals)."""
    if step <= 0:
        raise ValueError("step must be positive")
    if start < end:
        raise ValueError("gamma_start must not be below gamma_end")
    count = int(round((start - end) / step)) + 1
    return [round(start - i * step, 10) for i in range(count)]


def within_cluster_variance(labels, curves, centers, w: int = DEFAULT_WINDOW, cost: str = "abs") -> float:
    """Mean over clusters of the mean squared member-to-center DTW distance."""
    labels = np.asarray(getattr(labels, "labels", labels), dtype=int)
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    d2 = dtw_batch(C[labels], curves, w, cost) ** 2
    k = C.shape[0]
    per = np.bincount(labels, weights=d2, minlength=k) / np.bincount(labels, minlength=k)
    return float(per.mean())


@dataclass
class SweepPoint:
    gamma: float
    k: int
    vcn: float
    q: float
    partition: Partition
    variance: float
    tlps: list = field(default_factory=list, repr=False)

    def csv_row(self) -> list:
        v = "" if not math.isfinite(self.vcn) else f"{self.vcn:.12g}"
        return [f"{self.gamma:.12g}", self.k, v, f"{self.q:.12g}", f"{self.variance:.12g}"]


def gamma_sweep(graph, curves, dm, gammas=None, w: int = DEFAULT_WINDOW, cost: str = "abs",
                resolution: str = "literal", threads: int = 1) -> list[SweepPoint]:
    """Louvain at every ``gamma`` (descending), scored by VCN against DBA profiles.

    Identical partitions reached at different ``gamma`` share one profile
    extraction.  ``k = 1`` points carry ``vcn = nan``.
    """
    gammas = list(gamma_grid(*DEFAULT_GRID) if gammas is None else gammas)
    X = np.asarray(curves, dtype=float)

    def run(gamma):
        return louvain(graph, gamma, resolution)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, gammas))
    else:
        results = [run(gm) for gm in gammas]

    scored = {}
    points = []
    for gamma, res in zip(gammas, results):
        key = res.partition.labels.tobytes()
        if key not in scored:
            tlps = extract_tlps(res.partition, X, dm, w)
            C = tlp_matrix(tlps)
            score = vcn(res.partition, C, X, w, cost) if res.k >= 2 else math.nan
            scored[key] = (tlps, score, within_cluster_variance(res.partition, X, C, w, cost))
        tlps, score, var = scored[key]
        points.append(SweepPoint(float(gamma), res.k, score, res.q_history[-1], res.partition, var, tlps))
        log.debug("gamma=%.4f k=%d vcn=%s", gamma, res.k, score)
    return points


def write_sweep(points, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["gamma", "k", "vcn", "Q", "variance"])
        for p in points:
            wr.writerow(p.csv_row())


@dataclass
class Layer:
    interval: tuple
    point: SweepPoint | None

    @property
    def empty(self) -> bool:
        return self.point is None

    @property
    def k(self):
        return None if self.point is None else self.point.k

    @property
    def variance(self):
        return None if self.point is None else self.point.variance


@dataclass
class TLPDirectory:
    layers: list

    def nonempty(self) -> list:
        return [layer for layer in self.layers if not layer.empty]

    def manifest(self) -> dict:
        out = []
        for i, layer in enumerate(self.layers):
            lo, hi = layer.interval
            entry = {"layer": i, "interval": [lo, None if math.isinf(hi) else hi]}
            if layer.empty:
                entry["empty"] = True
            else:
                p = layer.point
                entry.update(gamma=float(f"{p.gamma:.12g}"), k=p.k, vcn=float(f"{p.vcn:.12g}"),
                             q=float(f"{p.q:.12g}"), variance=float(f"{p.variance:.12g}"),
                             tlp_file=f"layer{i}_tlp.csv", partition_file=f"layer{i}_partition.csv")
            out.append(entry)
        return {"layers": out}

    def write(self, outdir, curve_ids=None) -> None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, layer in enumerate(self.layers):
            if layer.empty:
                continue
            write_tlps(layer.point.tlps, outdir / f"layer{i}_tlp.csv")
            layer.point.partition.write(outdir / f"layer{i}_partition.csv", curve_ids)
        with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_intervals(intervals):
    ivs = sorted((float(lo), float(hi)) for lo, hi in intervals)
    for (lo, hi) in ivs:
        if not lo < hi:
            raise ValueError(f"empty interval [{lo}, {hi})")
    for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
        if lo < hi:
            raise ValueError("intervals overlap")
    return ivs


def build_directory(sweep, intervals=DEFAULT_INTERVALS) -> TLPDirectory:
    """Pick, per interval, the sweep point with maximum VCN (ties: larger gamma).

    Points with ``k = 1`` (VCN undefined) are never selected; an interval with
    no eligible point becomes an empty layer.
    """
    if not sweep:
        raise ValueError("empty sweep")
    layers = []
    for lo, hi in _check_intervals(intervals):
        best = None
        for p in sweep:
            if not (lo <= p.k < hi) or p.k < 2 or not math.isfinite(p.vcn):
                continue
            if best is None or p.vcn > best.vcn or (p.vcn == best.vcn and p.gamma > best.gamma):
                best = p
        if best is None:
            log.warning("no sweep point with k in [%g, %g); layer left empty", lo, hi)
        layers.append(Layer((int(lo), hi if math.isinf(hi) else int(hi)), best))
    if all(layer.empty for layer in layers):
        raise EmptyDirectory("no sweep point falls in any interval")
    return TLPDirectory(layers)
