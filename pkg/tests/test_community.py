import numpy as np
import pytest
from hypothesis import given, strategies as st

from loadnet.community import (CommunityAggregates, Partition, _coarsen, delta_q, louvain,
                               modularity, quality)
from loadnet.errors import EmptyGraph
from loadnet.netbuild import WeightedGraph
from oracles import best_partition, modularity_dense


def graph_from_edges(n, edges):
    src, dst, w = zip(*edges)
    return WeightedGraph(n, np.array(src), np.array(dst), np.array(w, dtype=float))


def random_graph(rng, n, p=0.3):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    if not keep.any():
        keep[0] = True
    return WeightedGraph(n, iu[keep], ju[keep], rng.random(keep.sum()) + 0.01)


TRIANGLES = graph_from_edges(6, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)])


def test_modularity_examples():
    assert modularity(TRIANGLES, np.zeros(6, dtype=int)) == 0.0
    assert modularity(TRIANGLES, [0, 0, 0, 1, 1, 1]) == 0.5
    g = random_graph(np.random.default_rng(0), 9)
    k = g.adjacency().sum(axis=1)
    assert modularity(g, np.arange(9)) == pytest.approx(-np.sum(k ** 2) / k.sum() ** 2, abs=1e-15)
    with pytest.raises(EmptyGraph):
        modularity(np.zeros((3, 3)), [0, 1, 2])


@given(st.integers(2, 14), st.integers(0, 10_000))
def test_modularity_matches_double_loop(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    labels = rng.integers(0, 4, n)
    A = g.adjacency().tolist()
    assert abs(modularity(g, labels) - modularity_dense(A, labels.tolist())) <= 1e-12
    assert abs(quality(g, labels, 0.6, "standard") - modularity_dense(A, labels.tolist(), 0.6)) <= 1e-12


def test_partition_dense_labels_and_io(tmp_path):
    p = Partition(np.array([7, 7, 3, 9, 3]))
    assert p.labels.tolist() == [0, 0, 1, 2, 1] and p.k == 3
    p.write(tmp_path / "p.csv", [10, 11, 12, 13, 14])
    back, ids = Partition.read(tmp_path / "p.csv")
    assert ids == [10, 11, 12, 13, 14] and back.labels.tolist() == p.labels.tolist()
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "curve_id,cluster_label"


def gain_oracle_trace(gamma=1.0, resolution="literal"):
    """Trace hook that recomputes every offered gain as a dense before/after difference."""
    checked = []

    def trace(level, agg, j, gains):
        A = agg.dense().tolist()
        comm = list(agg.comm)
        fresh = max(comm) + 1
        before = list(comm)
        before[j] = fresh
        q0 = modularity_dense(A, before, gamma if resolution == "standard" else 1.0)
        for c, g in gains.items():
            after = list(comm)
            after[j] = c
            q1 = modularity_dense(A, after, gamma if resolution == "standard" else 1.0)
            checked.append(abs(g - (q1 - q0)))

    return trace, checked


@given(st.integers(3, 20), st.integers(0, 10_000))
def test_gains_equal_modularity_differences(n, seed):
    g = random_graph(np.random.default_rng(seed), n)
    trace, checked = gain_oracle_trace()
    louvain(g, 1.0, trace=trace)
    assert checked and max(checked) <= 1e-9


@given(st.integers(3, 15), st.integers(0, 10_000), st.floats(0.2, 2.0))
def test_standard_mode_gains_match_gamma_modularity(n, seed, gamma):
    g = random_graph(np.random.default_rng(seed), n)
    trace, checked = gain_oracle_trace(gamma, "standard")
    louvain(g, gamma, "standard", trace=trace)
    assert max(checked) <= 1e-9


def test_delta_q_without_links_is_negative():
    # isolated-vertex insertion with no edges into c: -(S_tot k_j) / (2 m^2)
    s_tot, k_j, m = 3.0, 2.0, 5.0
    assert delta_q(1.0, s_tot, k_j, 0.0, m) == pytest.approx(-s_tot * k_j / (2 * m * m), abs=1e-15)


def test_two_triangles_are_optimal():
    res = louvain(TRIANGLES)
    assert res.partition.labels.tolist() == [0, 0, 0, 1, 1, 1]
    assert res.q_history[-1] == 0.5
    best, labels = best_partition(TRIANGLES.adjacency().tolist())
    assert best == pytest.approx(0.5, abs=1e-12) and Partition(np.array(labels)).labels.tolist() == [0, 0, 0, 1, 1, 1]


def test_single_edge_merges():
    res = louvain(graph_from_edges(2, [(0, 1, 1.0)]))
    assert res.k == 1 and res.q_history[-1] == 0.0


def test_gamma_zero_keeps_singletons():
    g = random_graph(np.random.default_rng(1), 12, 0.5)
    res = louvain(g, 0.0)
    assert res.k == 12


def test_empty_graph_rejected():
    with pytest.raises(EmptyGraph):
        louvain(WeightedGraph(3, np.array([], dtype=int), np.array([], dtype=int), np.array([])))
    with pytest.raises(EmptyGraph):
        louvain(graph_from_edges(2, [(0, 1, 0.0)]))


@given(st.integers(3, 40), st.integers(0, 10_000), st.floats(0.3, 1.5),
       st.sampled_from(["literal", "standard"]))
def test_histories_monotone_and_deterministic(n, seed, gamma, resolution):
    g = random_graph(np.random.default_rng(seed), n, 0.2)
    a = louvain(g, gamma, resolution)
    b = louvain(g, gamma, resolution)
    assert a.partition.labels.tolist() == b.partition.labels.tolist()
    obj = a.objective_history
    assert all(y >= x - 1e-12 for x, y in zip(obj, obj[1:]))
    assert a.q_history[-1] == pytest.approx(modularity(g, a.partition), abs=1e-12)


@given(st.integers(3, 40), st.integers(0, 10_000))
def test_q_history_non_decreasing_at_gamma_one(n, seed):
    res = louvain(random_graph(np.random.default_rng(seed), n, 0.2))
    assert all(y >= x - 1e-12 for x, y in zip(res.q_history, res.q_history[1:]))


@given(st.integers(2, 12), st.integers(0, 10_000))
def test_louvain_never_worse_than_singletons_and_bounded_by_optimum(n, seed):
    g = random_graph(np.random.default_rng(seed), min(n, 8), 0.5)
    res = louvain(g)
    best, _ = best_partition(g.adjacency().tolist())
    assert res.q_history[-1] <= best + 1e-12
    assert res.q_history[-1] >= modularity(g, np.arange(g.n)) - 1e-12


@given(st.integers(3, 30), st.integers(0, 10_000))
def test_coarsening_conserves_weight_and_modularity(n, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    agg = CommunityAggregates(g.n, g.src, g.dst, g.weight)
    labels = rng.integers(0, 4, n)
    labels = np.unique(labels, return_inverse=True)[1].ravel()
    coarse = _coarsen(agg, labels)
    assert coarse.m == pytest.approx(agg.m, rel=1e-12)
    # the coarse graph with every super-vertex alone has the flat partition's Q
    q_coarse = modularity_dense(coarse.dense().tolist(), list(range(coarse.n)))
    assert q_coarse == pytest.approx(modularity(g, labels), abs=1e-12)


def test_aggregate_invariants():
    g = random_graph(np.random.default_rng(2), 15)
    agg = CommunityAggregates(g.n, g.src, g.dst, g.weight)
    assert sum(agg.sigma_tot) == pytest.approx(2 * agg.m)
    np.testing.assert_allclose(agg.k, g.adjacency().sum(axis=1))


def test_write_meta(tmp_path):
    import json
    res = louvain(TRIANGLES)
    res.write_meta(tmp_path / "m.json")
    meta = json.loads((tmp_path / "m.json").read_text())
    assert meta["k"] == 2 and meta["final_q"] == 0.5 and meta["gamma"] == 1.0
    assert meta["passes"] == len(res.q_history)
