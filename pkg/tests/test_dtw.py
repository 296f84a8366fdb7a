import numpy as np
import pytest
from hypothesis import given, strategies as st

from loadnet.dtw import (DistanceMatrix, align_batch, cross_distances, dtw_batch, dtw_distance,
                         dtw_path, pairwise_distances)
from loadnet.errors import FormatError, LengthMismatch, TooFewCurves
from oracles import all_paths, cell_cost, dtw_enumerate, dtw_scalar

series = st.integers(1, 7).flatmap(
    lambda n: st.tuples(*[st.lists(st.floats(0, 1, allow_subnormal=False), min_size=n, max_size=n)] * 2))


def path_cost(x, y, path, cost="abs"):
    return sum(cell_cost(x[i], y[j], cost) for i, j in path)


def check_path(path, n, w):
    assert path[0] == (0, 0) and path[-1] == (n - 1, n - 1)
    for (a, b), (c, d) in zip(path, path[1:]):
        assert (c - a, d - b) in {(1, 1), (1, 0), (0, 1)}
    assert all(abs(i - j) < w for i, j in path)


def test_identity_and_small_example():
    x = np.random.default_rng(0).random(96)
    assert dtw_distance(x, x) == 0.0
    x, y = [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]
    brute = min(path_cost(x, y, p) for p in all_paths(3, 3, 4))
    assert dtw_distance(x, y, 4) == brute == 1.0


def test_band_edge_cell_is_unreachable():
    # cells 4 apart, like (0, 4), are forbidden at w=4 and cells 3 apart are
    # allowed: a spike shifted by 3 slots aligns for free, one shifted by 4 does not
    x = np.zeros(96)
    y3 = np.zeros(96)
    y4 = np.zeros(96)
    x[40] = 1.0
    y3[43] = 1.0
    y4[44] = 1.0
    assert dtw_distance(x, y3, 4) == 0.0
    assert dtw_distance(x, y4, 4) > 0.0
    assert dtw_distance(x, y4, 5) == 0.0


@given(series, st.sampled_from([1, 2, 3, 4]), st.sampled_from(["abs", "squared"]))
def test_matches_exhaustive_enumeration(xy, w, cost):
    x, y = map(np.asarray, xy)
    assert abs(dtw_distance(x, y, w, cost) - dtw_enumerate(x, y, w, cost)) <= 1e-12


@given(series, st.sampled_from([1, 2, 4]))
def test_symmetry_and_band_monotonicity(xy, w):
    x, y = map(np.asarray, xy)
    assert dtw_distance(x, y, w) == dtw_distance(y, x, w)
    assert dtw_distance(x, y, w) >= dtw_distance(x, y, w + 1)


def test_w1_is_elementwise():
    rng = np.random.default_rng(1)
    x, y = rng.random(10), rng.random(10)
    assert dtw_distance(x, y, 1) == pytest.approx(np.abs(x - y).sum(), abs=1e-15)


def test_path_examples():
    x = np.random.default_rng(2).random(8)
    d, path = dtw_path(x, x, 4)
    assert d == 0.0 and path == [(i, i) for i in range(8)]
    d, path = dtw_path([0.3], [0.5], 4)
    assert path == [(0, 0)] and d == pytest.approx(0.2)


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1, allow_subnormal=False), min_size=n, max_size=n),
    st.lists(st.floats(0, 1, allow_subnormal=False), min_size=n, max_size=n))),
    st.sampled_from([1, 2, 4]), st.sampled_from(["abs", "squared"]))
def test_path_is_admissible_and_consistent(xy, w, cost):
    x, y = map(np.asarray, xy)
    d, path = dtw_path(x, y, w, cost)
    check_path(path, x.size, w)
    assert abs(path_cost(x, y, path, cost) - d) <= 1e-9
    assert d == dtw_distance(x, y, w, cost)


def test_path_tie_break_prefers_diagonal_then_up():
    # all-equal series: every path costs 0, the tie-break must give the diagonal
    _, path = dtw_path(np.zeros(5), np.zeros(5), 3)
    assert path == [(i, i) for i in range(5)]
    # several optimal paths: walking back from the end, the chosen one takes the
    # diagonal whenever it is optimal, otherwise (i-1, j), otherwise (i, j-1)
    x, y = np.array([0.0, 1.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0, 0.0])
    best = min(path_cost(x, y, p) for p in all_paths(4, 4, 4))
    optimal = [p for p in all_paths(4, 4, 4) if abs(path_cost(x, y, p) - best) < 1e-12]

    def backward_key(p):
        # rank of each backward step, walking from the end: diagonal < up < left
        rank = {(1, 1): 0, (1, 0): 1, (0, 1): 2}
        return [rank[(a - c, b - d)] for (a, b), (c, d) in zip(p[::-1], p[::-1][1:])]

    expected = min(optimal, key=backward_key)
    assert dtw_path(x, y, 4)[1] == expected


def test_align_batch_matches_single_paths():
    rng = np.random.default_rng(3)
    X, Y = rng.random((5, 9)), rng.random((5, 9))
    dist, pair, ii, jj = align_batch(X, Y, 3, "squared")
    for b in range(5):
        d, path = dtw_path(X[b], Y[b], 3, "squared")
        assert dist[b] == d
        assert sorted(zip(ii[pair == b].tolist(), jj[pair == b].tolist())) == sorted(path)


def test_batch_and_cross_distances():
    rng = np.random.default_rng(4)
    A, B = rng.random((4, 11)), rng.random((3, 11))
    C = cross_distances(A, B, 2)
    for i in range(4):
        for j in range(3):
            assert C[i, j] == pytest.approx(dtw_scalar(A[i], B[j], 2), abs=1e-12)
    np.testing.assert_array_equal(dtw_batch(A[:3], B, 2), np.diag(C[:3]))


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        dtw_distance(np.zeros(3), np.zeros(4))
    with pytest.raises(LengthMismatch):
        dtw_path(np.zeros(3), np.zeros(4))


def test_pairwise_examples():
    x = np.random.default_rng(5).random(12)
    dm = pairwise_distances(np.vstack([x, x]), 4)
    np.testing.assert_array_equal(dm.entries, np.zeros((2, 2)))
    with pytest.raises(TooFewCurves):
        pairwise_distances(x[None, :], 4)


def test_pairwise_matches_per_pair_oracle():
    rng = np.random.default_rng(6)
    X = rng.random((20, 12))
    for w in (1, 2, 4):
        dm = pairwise_distances(X, w)
        assert np.array_equal(dm.entries, dm.entries.T)
        assert np.all(np.diag(dm.entries) == 0)
        for i in range(20):
            for j in range(i + 1, 20):
                assert abs(dm[i, j] - dtw_scalar(X[i], X[j], w)) <= 1e-12


def test_thread_count_and_chunking_do_not_change_bits():
    X = np.random.default_rng(7).random((40, 96))
    ref = pairwise_distances(X, 4).entries
    for threads, chunk in ((1, 17), (3, 50), (4, 20000)):
        assert np.array_equal(pairwise_distances(X, 4, threads=threads, chunk=chunk).entries, ref)


def test_binary_round_trip(tmp_path):
    X = np.random.default_rng(8).random((6, 96))
    dm = pairwise_distances(X, 3, "squared", curve_ids=[10, 11, 12, 13, 14, 15])
    dm.save(tmp_path / "d.bin")
    raw = (tmp_path / "d.bin").read_bytes()
    assert raw[:8] == b"LNDTWDM1"
    assert len(raw) == 32 + 8 * 15
    back = DistanceMatrix.load(tmp_path / "d.bin")
    assert np.array_equal(back.entries, dm.entries)
    assert (back.curve_ids, back.w, back.cost) == ([10, 11, 12, 13, 14, 15], 3, "squared")
    (tmp_path / "d.bin").write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        DistanceMatrix.load(tmp_path / "d.bin")
