import numpy as np
import pytest
from hypothesis import given, strategies as st

from loadnet.errors import EmptyGraph, TooFewCurves
from loadnet.netbuild import WeightedGraph, build_graph, vertex_thresholds

THREE = np.array([[0.0, 1.0, 3.0],
                  [1.0, 0.0, 5.0],
                  [3.0, 5.0, 0.0]])


def random_dm(rng, n):
    pts = rng.random((n, 3))
    return np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))


def naive_edges(D, lam, rule):
    n = len(D)
    eps = [lam * sum(D[i][j] for j in range(n) if j != i) / (n - 1) for i in range(n)]
    if rule == "global":
        g = lam * sum(D[i][j] for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
        eps = [g] * n
    out = set()
    for i in range(n):
        for j in range(i + 1, n):
            a, b = D[i][j] < eps[i], D[i][j] < eps[j]
            if (a and b) if rule == "intersection" else (a or b):
                out.add((i, j))
    return out


def test_three_vertex_thresholds():
    np.testing.assert_allclose(vertex_thresholds(THREE, 1.0), [2.0, 3.0, 4.0])


def test_three_vertex_graph():
    g = build_graph(THREE, 1.0)
    assert g.edge_set() == {(0, 1), (0, 2)}
    assert g.meta["d_max"] == 3.0
    w = {(s, d): x for s, d, x in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())}
    assert w[(0, 1)] == pytest.approx(2 / 3, abs=1e-15)
    assert w[(0, 2)] == 0.0
    # intersection: {0,1} is below both 2 and 3; {0,2} is below 4 but not 2
    assert build_graph(THREE, 1.0, "intersection").edge_set() == {(0, 1)}


def test_constant_distances_and_linearity(rng):
    D = np.full((5, 5), 2.5)
    np.fill_diagonal(D, 0)
    np.testing.assert_allclose(vertex_thresholds(D, 0.4), 1.0)
    D = random_dm(rng, 8)
    np.testing.assert_allclose(vertex_thresholds(D, 1.4), 2 * vertex_thresholds(D, 0.7), rtol=1e-15)


def test_twins_get_weight_one():
    D = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    g = build_graph(D, 1.0)
    w = {(s, d): x for s, d, x in zip(g.src.tolist(), g.dst.tolist(), g.weight.tolist())}
    assert w[(0, 1)] == 1.0


def test_errors():
    with pytest.raises(TooFewCurves):
        vertex_thresholds(np.zeros((1, 1)), 1.0)
    with pytest.raises(EmptyGraph):
        build_graph(THREE, 0.1)
    with pytest.raises(ValueError):
        build_graph(THREE, 1.0, "bogus")


@given(st.integers(2, 25), st.floats(0.2, 1.5), st.sampled_from(["union", "intersection", "global"]),
       st.integers(0, 10_000))
def test_edges_match_naive_rule(n, lam, rule, seed):
    D = random_dm(np.random.default_rng(seed), n)
    expected = naive_edges(D.tolist(), lam, rule)
    if not expected:
        with pytest.raises(EmptyGraph):
            build_graph(D, lam, rule)
        return
    g = build_graph(D, lam, rule)
    assert g.edge_set() == expected
    assert np.all((g.weight >= 0) & (g.weight <= 1))
    assert g.weight.min() == 0.0 or g.meta["d_max"] == 0
    assert np.all(g.src < g.dst)


@given(st.integers(3, 25), st.floats(0.2, 1.0), st.floats(1.0, 2.0), st.integers(0, 10_000))
def test_lambda_monotone_and_scale_invariant(n, lam, factor, seed):
    D = random_dm(np.random.default_rng(seed), n)
    try:
        small = build_graph(D, lam)
    except EmptyGraph:
        return
    assert small.edge_set() <= build_graph(D, lam * factor).edge_set()
    scaled = build_graph(D * 7.0, lam)
    assert scaled.edge_set() == small.edge_set()
    np.testing.assert_allclose(scaled.weight, small.weight, rtol=0, atol=1e-12)


def test_write_read_round_trip(tmp_path, rng):
    D = random_dm(rng, 12)
    g = build_graph(D, 0.8)
    g.curve_ids = list(range(100, 112))
    g.meta["curve_ids"] = g.curve_ids
    g.write(tmp_path / "e.csv", tmp_path / "g.json")
    back = WeightedGraph.read(tmp_path / "e.csv", tmp_path / "g.json")
    assert back.n == 12 and back.edge_set() == g.edge_set()
    np.testing.assert_allclose(back.weight, g.weight, rtol=1e-11, atol=0)
    assert (tmp_path / "e.csv").read_text().splitlines()[0] == "src_id,dst_id,weight"
    assert back.meta["edge_count"] == g.n_edges and back.meta["rule"] == "union"
