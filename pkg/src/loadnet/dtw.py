"""Banded dynamic time warping.

Cells with ``|i - j| >= w`` are forbidden, so ``w = 1`` reduces to the
lock-step (diagonal) distance.  All kernels are vectorized over a batch of
aligned pairs: row ``p`` of ``X`` is compared with row ``p`` of ``Y``.  The
band is stored in offset coordinates, ``o = j - i + (w - 1)``, which keeps
memory at ``O(batch * n * (2w - 1))``.

A dense distance matrix for ``N`` curves needs ``8 N^2`` bytes
(about 3.9 GB for 22 000 curves).
"""
from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, LengthMismatch, TooFewCurves

DEFAULT_WINDOW = 4
COST_MODES = ("abs", "squared")

_MAGIC = b"LNDTWDM1"
_HEADER = struct.Struct("<8sQQB7x")


def _check_pair(x, y, w):
    if x.shape[-1] != y.shape[-1]:
        raise LengthMismatch(f"series lengths differ: {x.shape[-1]} != {y.shape[-1]}")
    if x.shape[-1] < 1:
        raise ValueError("series must be non-empty")
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    if x.shape[0] != y.shape[0]:
        raise ValueError("batches must have the same number of series")


def _banded_dp(X, Y, w, cost, keep_table):
    """Cumulative cost over the band.

    Works on transposed copies so each row of the grid is a contiguous
    ``(2w-1, batch)`` block; ``Y`` is padded with ``inf`` so that off-grid band
    cells cost ``inf`` without masking.  Returns the final band row as
    ``(batch, 2w-1)``.  With ``keep_table`` it returns the whole table as
    ``(n + 1, 2w + 1, batch)`` with an ``inf`` border: cell ``(i, o)`` lives at
    ``[i + 1, o + 1]``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _check_pair(X, Y, w)
    if cost not in COST_MODES:
        raise ValueError(f"unknown cost mode {cost!r}")
    p, n = X.shape
    B = 2 * w - 1
    mid = w - 1
    XT = np.ascontiguousarray(X.T)
    YT = np.full((n + 2 * mid, p), np.inf)
    YT[mid:mid + n] = Y.T
    if keep_table:
        padded = np.full((n + 1, B + 2, p), np.inf)
        table = padded[1:, 1:-1]

    def costs(i):
        d = YT[i:i + B] - XT[i]
        return np.abs(d, out=d) if cost == "abs" else np.multiply(d, d, out=d)

    c = costs(0)
    row = np.full((B, p), np.inf)
    row[mid] = c[mid]
    for o in range(mid + 1, B):
        np.add(c[o], row[o - 1], out=row[o])
    if keep_table:
        table[0] = row

    vert = np.empty((B, p))
    tmp = np.empty(p)
    for i in range(1, n):
        c = costs(i)
        # predecessor (i-1, j-1) is prev offset o, (i-1, j) is prev offset o+1
        np.minimum(row[:-1], row[1:], out=vert[:-1])
        vert[-1] = row[-1]
        cur = table[i] if keep_table else np.empty((B, p))
        np.add(c[0], vert[0], out=cur[0])
        for o in range(1, B):
            np.minimum(vert[o], cur[o - 1], out=tmp)
            np.add(c[o], tmp, out=cur[o])
        row = cur
    if keep_table:
        return padded
    return row.T


def dtw_batch(X, Y, w: int = DEFAULT_WINDOW, cost: str = "abs") -> np.ndarray:
    """DTW distances between corresponding rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return _banded_dp(X, Y, w, cost, keep_table=False)[:, w - 1].copy()


def dtw_distance(x, y, w: int = DEFAULT_WINDOW, cost: str = "abs") -> float:
    """Banded DTW distance between two equal-length series.

    Parameters
    ----------
    x, y : array_like
        1-D series of equal length.
    w : int
        Band half-width; cells with ``|i - j| >= w`` are unreachable.
    cost : {"abs", "squared"}
        Per-cell cost ``|x_i - y_j|`` or ``(x_i - y_j)**2``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("dtw_distance expects 1-D series")
    if x.shape != y.shape:
        raise LengthMismatch(f"series lengths differ: {x.size} != {y.size}")
    return float(dtw_batch(x[None], y[None], w, cost)[0])


def _backtrack(padded, w):
    """Vectorized backtrace; yields ``(active, i, j)`` per step from the end.

    Ties prefer the diagonal, then ``(i-1, j)``, then ``(i, j-1)``.
    """
    n = padded.shape[0] - 1
    p = padded.shape[2]
    mid = w - 1
    cols = np.arange(p)
    i = np.full(p, n - 1)
    o = np.full(p, mid)
    yield np.ones(p, dtype=bool), i.copy(), i.copy()
    active = i > 0
    while active.any():
        r, q = i + 1, o + 1
        diag = padded[r - 1, q, cols]
        up = padded[r - 1, q + 1, cols]
        left = padded[r, q - 1, cols]
        take_diag = (diag <= up) & (diag <= left)
        take_up = ~take_diag & (up <= left)
        take_left = ~take_diag & ~take_up
        i = np.where(active & ~take_left, i - 1, i)
        o = np.where(active & take_up, o + 1, np.where(active & take_left, o - 1, o))
        j = i + o - mid
        yield active.copy(), i.copy(), j
        active &= (i > 0) | (j > 0)


def _steps_to_paths(steps, p):
    paths = [[] for _ in range(p)]
    for active, i, j in steps:
        for k in np.flatnonzero(active):
            paths[k].append((int(i[k]), int(j[k])))
    return [path[::-1] for path in paths]


def dtw_path(x, y, w: int = DEFAULT_WINDOW, cost: str = "abs") -> tuple[float, list[tuple[int, int]]]:
    """Distance and optimal warping path, ``[(0, 0), ..., (n-1, n-1)]``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"series lengths differ: {x.size} != {y.size}")
    table = _banded_dp(x[None], y[None], w, cost, keep_table=True)
    dist = float(table[-1, w, 0])
    path = _steps_to_paths(_backtrack(table, w), 1)[0]
    return dist, path


def align_batch(X, Y, w: int = DEFAULT_WINDOW, cost: str = "abs"):
    """Align many pairs at once.

    Returns ``(distances, pair_idx, i_idx, j_idx)``: every step ``(i, j)`` of
    the optimal path of pair ``p`` appears once as
    ``(pair_idx[s], i_idx[s], j_idx[s])``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    table = _banded_dp(X, Y, w, cost, keep_table=True)
    dist = table[-1, w].copy()
    P, I, J = [], [], []
    for active, i, j in _backtrack(table, w):
        idx = np.flatnonzero(active)
        P.append(idx)
        I.append(i[idx])
        J.append(j[idx])
    return dist, np.concatenate(P), np.concatenate(I), np.concatenate(J)


def cross_distances(A, B, w: int = DEFAULT_WINDOW, cost: str = "abs") -> np.ndarray:
    """``(len(A), len(B))`` matrix of DTW distances between two curve sets."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    ia, ib = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
    return dtw_batch(A[ia.ravel()], B[ib.ravel()], w, cost).reshape(len(A), len(B))


@dataclass
class DistanceMatrix:
    entries: np.ndarray
    curve_ids: list
    w: int = DEFAULT_WINDOW
    cost: str = "abs"

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return self.entries[key]

    def save(self, path) -> None:
        """Binary dump: header, then the strict upper triangle (row-major, <f8).

        Curve ids go to a JSON sidecar ``<path>.ids.json``.
        """
        path = Path(path)
        iu = np.triu_indices(self.n, k=1)
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, self.n, self.w, COST_MODES.index(self.cost)))
            fh.write(self.entries[iu].astype("<f8").tobytes())
        sidecar = Path(str(path) + ".ids.json")
        sidecar.write_text(json.dumps({"curve_ids": list(self.curve_ids)}) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DistanceMatrix":
        path = Path(path)
        raw = path.read_bytes()
        if len(raw) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, n, w, mode = _HEADER.unpack_from(raw)
        if magic != _MAGIC or mode >= len(COST_MODES):
            raise FormatError(f"{path}: not a distance matrix file")
        m = n * (n - 1) // 2
        body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        if body.size != m:
            raise FormatError(f"{path}: expected {m} entries, found {body.size}")
        D = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        D[iu] = body
        D.T[iu] = body
        ids = json.loads(Path(str(path) + ".ids.json").read_text(encoding="utf-8"))["curve_ids"]
        return cls(D, ids, int(w), COST_MODES[mode])


def pairwise_distances(curves, w: int = DEFAULT_WINDOW, cost: str = "abs", curve_ids=None,
                       threads: int = 1, chunk: int = 20000) -> DistanceMatrix:
    """Symmetric DTW distance matrix, one evaluation per unordered pair.

    Pairs are split into chunks that may run on ``threads`` workers; each
    chunk writes a disjoint slice, and every pair is computed by the same
    elementwise operations regardless of chunking, so the result is
    bit-identical for any thread count.
    """
    X = np.asarray(curves, dtype=float)
    if X.ndim != 2:
        raise ValueError("curves must be an (n_curves, length) array")
    if X.shape[0] < 2:
        raise TooFewCurves(f"need at least two curves, got {X.shape[0]}")
    n = X.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    out = np.empty(iu.size)

    def work(lo):
        hi = min(lo + chunk, iu.size)
        out[lo:hi] = dtw_batch(X[iu[lo:hi]], X[ju[lo:hi]], w, cost)

    starts = range(0, iu.size, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for lo in starts:
            work(lo)

    D = np.zeros((n, n))
    D[iu, ju] = out
    D[ju, iu] = out
    ids = list(range(n)) if curve_ids is None else list(curve_ids)
    return DistanceMatrix(D, ids, w, cost)
