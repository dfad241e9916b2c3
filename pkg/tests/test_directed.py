import math

import numpy as np
import pytest

from closeness import generators as gen
from closeness.directed import (
    reachability_estimate,
    roundtrip_hybrid,
    roundtrip_rows,
    weighted_reachability_estimate,
)
from closeness.estimators import estimate_hybrid, sample_uniform
from closeness.graph import DisconnectedGraphError, Graph, GraphError, transpose
from closeness.rng import stream

from oracles import dfs_reach, direct_hybrid, floyd_warshall, int_matrix

# ---------------------------------------------------------------- round trip


@pytest.mark.parametrize("seed", range(3))
def test_roundtrip_symmetric_digraph_doubles_undirected(seed):
    ug = gen.connected_random(150, 200, seed=seed, max_length=9)
    dg = gen.symmetric_digraph(ug)
    for eps in (0.1, 0.5):
        a = roundtrip_hybrid(dg, 12, seed, eps)
        b = estimate_hybrid(ug, sample_uniform(ug, 12, seed), eps)
        assert np.array_equal(a.S_hat, 2 * b.S_hat)
        assert np.array_equal(a.exact, b.exact)


def test_roundtrip_three_cycle():
    g = Graph.from_edges(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)], directed=True)
    t = roundtrip_hybrid(g, 2, 0, 0.5)
    assert np.all(t.S_hat[t.exact] == 6.0)
    assert np.all(t.S_hat == 6.0)


@pytest.mark.parametrize("seed", range(2))
def test_roundtrip_matches_direct_evaluation(seed):
    g = gen.random_strongly_connected(300, 600, seed=seed, max_length=20)
    D = int_matrix(floyd_warshall(g))
    R = D + D.T
    C = sample_uniform(g, 32, seed)
    for eps in (0.1, 0.5):
        S_ref, E_ref = direct_hybrid(R, C.nodes, eps)
        t = roundtrip_hybrid(g, 32, seed, eps)
        np.testing.assert_allclose(t.S_hat, S_ref, rtol=1e-9)
        np.testing.assert_allclose(t.sqerr, E_ref, rtol=1e-9, atol=1e-9)


def test_roundtrip_metric_axioms_on_sampled_triples():
    g = gen.random_strongly_connected(120, 300, seed=3, max_length=15)
    C = sample_uniform(g, 12, 3).nodes
    rows = np.vstack(roundtrip_rows(g, C))
    M = rows[:, C]
    assert np.all(np.diag(M) == 0)
    assert np.array_equal(M, M.T)
    k = len(C)
    for a in range(k):
        for b in range(k):
            assert np.all(M[a, b] <= M[a, :] + M[:, b])


def test_roundtrip_rejects_not_strongly_connected():
    g = Graph.from_edges(4, [(0, 1, 1), (1, 2, 1), (2, 0, 1), (2, 3, 1)], directed=True)
    with pytest.raises(DisconnectedGraphError) as exc:
        roundtrip_hybrid(g, 4, 0)
    assert 3 in (exc.value.u, exc.value.v)


def test_roundtrip_rejects_undirected():
    with pytest.raises(GraphError):
        roundtrip_hybrid(gen.path(4), 2, 0, 0.5)


# ---------------------------------------------------------------- reachability


def _truth(g):
    D = floyd_warshall(g)
    reach = dfs_reach(g)
    R = np.array([len(r) for r in reach])
    dsum = np.array([sum(D[v, u] for u in r) for v, r in enumerate(reach)])
    return reach, R, dsum


def test_sink_and_small_reach():
    # 0 -> 1 -> 2 (lengths 2, 3); 2 is a sink, 0 reaches exactly two nodes
    g = Graph.from_edges(3, [(0, 1, 2), (1, 2, 3)], directed=True)
    r = reachability_estimate(g, 3, 0)
    assert r.B_hat[2] == 0 and r.R_hat[2] == 0
    assert r.R_hat[0] == 2 and r.B_hat[0] == (2 + 5) / 2
    assert r.exact.all()


@pytest.mark.parametrize("seed", range(4))
def test_sub_k_nodes_exact(seed):
    g = gen.random_dag(120, 0.03, seed=seed, max_length=5)
    for direction in ("outbound", "inbound"):
        h = g if direction == "outbound" else transpose(g)
        reach, R, dsum = _truth(h)
        r = reachability_estimate(g, 8, seed, direction)
        small = R < 8
        assert np.array_equal(r.exact, small)
        assert np.array_equal(r.R_hat[small], R[small].astype(float))
        with np.errstate(invalid="ignore"):
            avg = np.where(R > 0, dsum / np.maximum(R, 1), 0)
        np.testing.assert_allclose(r.B_hat[small], avg[small], rtol=1e-12)


def _first_k(reach, order, k):
    pos = {u: i for i, u in enumerate(order)}
    return [set(sorted(r, key=pos.__getitem__)[:k]) for r in reach]


@pytest.mark.parametrize(
    "make",
    [
        lambda s: gen.random_dag(150, 0.04, seed=s, max_length=4),
        lambda s: gen.random_strongly_connected(150, 250, seed=s, max_length=4),
        lambda s: Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], directed=True),
    ],
    ids=["dag", "strongly-connected", "four-cycle"],
)
@pytest.mark.parametrize("seed", range(3))
def test_pruning_soundness(make, seed):
    g = make(seed)
    k = 3 if g.n == 4 else 6
    reach = dfs_reach(g)
    order = stream(seed, "order").permutation(g.n).tolist()
    want = _first_k(reach, order, k)
    full = reachability_estimate(g, k, seed, prune=False, record=True)
    pruned = reachability_estimate(g, k, seed, prune=True, record=True)
    assert [set(x) for x in full.samples] == want
    assert [set(x) for x in pruned.samples] == want
    assert np.array_equal(full.R_hat, pruned.R_hat)
    assert np.array_equal(full.B_hat, pruned.B_hat)
    assert pruned.scans <= k * g.n + g.n
    assert pruned.scans <= full.scans


def test_cardinality_formulas():
    g = gen.random_dag(200, 0.05, seed=1)
    u = reachability_estimate(g, 5, 2)
    s = reachability_estimate(g, 5, 2, cardinality="shifted")
    full = ~u.exact
    n = g.n
    assert np.all(u.T[full] >= 5)
    np.testing.assert_allclose(u.R_hat[full], 4 * (n - 1) / (u.T[full] - 1.0))
    np.testing.assert_allclose(s.R_hat[full], 1 + 4 * (n - 2) / (s.T[full] - 1.0))
    assert np.all(u.R_hat <= n - 1) and np.all(u.R_hat >= 0)


def test_unbiased_cardinality_exact_expectation():
    # the k-th reachable node sits at position T among the other n - 1 nodes;
    # averaging (k-1)(n-1)/(T-1) over that distribution gives R exactly
    N, k = 40, 4
    for R in (4, 9, 25, 40):
        mean = sum(
            math.comb(t - 1, k - 1) * math.comb(N - t, R - k) / math.comb(N, R) * (k - 1) * N / (t - 1)
            for t in range(k, N + 1)
        )
        assert abs(mean - R) < 1e-9


def test_reachability_unbiased_small_dag():
    g = gen.random_dag(30, 0.2, seed=4)
    _, R, _ = _truth(g)
    runs = np.array([reachability_estimate(g, 3, s).R_hat for s in range(4000)])
    se = runs.std(axis=0, ddof=1) / math.sqrt(len(runs))
    ok = (np.abs(runs.mean(axis=0) - R) <= 3 * se) | (se == 0) & (runs.mean(axis=0) == R)
    assert ok.all()


def test_reachability_rejects_small_k_and_undirected():
    g = gen.random_dag(10, 0.3, seed=0)
    with pytest.raises(ValueError):
        reachability_estimate(g, 2, 0)
    with pytest.raises(GraphError):
        reachability_estimate(gen.path(5), 3, 0)
    with pytest.raises(ValueError):
        reachability_estimate(g, 3, 0, direction="sideways")
    with pytest.raises(ValueError):
        reachability_estimate(g, 3, 0, cardinality="median")


def test_inbound_is_outbound_on_transpose():
    g = gen.random_dag(80, 0.05, seed=6, max_length=3)
    a = reachability_estimate(g, 5, 9, "inbound")
    b = reachability_estimate(transpose(g), 5, 9, "outbound")
    assert np.array_equal(a.R_hat, b.R_hat) and np.array_equal(a.B_hat, b.B_hat)


# ---------------------------------------------------------------- weighted reachability


def test_weighted_single_positive_node():
    g = gen.random_dag(60, 0.08, seed=2, max_length=4)
    reach = dfs_reach(g)
    D = floyd_warshall(g)
    z = 40
    beta = np.zeros(g.n)
    beta[z] = 2.5
    r = weighted_reachability_estimate(g, beta, 4, 0)
    for v in range(g.n):
        if z in reach[v]:
            assert r.R_hat[v] == 2.5 and r.count[v] == 1
            assert r.S_hat[v] == 2.5 * D[v, z]
        else:
            assert r.R_hat[v] == 0 and r.S_hat[v] == 0


def test_weighted_sub_k_exact():
    g = gen.random_dag(100, 0.03, seed=3, max_length=6)
    beta = np.random.default_rng(3).integers(0, 5, g.n).astype(float)
    reach = dfs_reach(g)
    D = floyd_warshall(g)
    r = weighted_reachability_estimate(g, beta, 6, 1)
    for v in range(g.n):
        pos = [u for u in reach[v] if beta[u] > 0]
        if len(pos) < 6:
            assert r.exact[v]
            assert r.R_hat[v] == pytest.approx(sum(beta[u] for u in pos))
            assert r.S_hat[v] == pytest.approx(sum(beta[u] * D[v, u] for u in pos))


@pytest.mark.parametrize("seed", range(3))
def test_weighted_pruning_soundness(seed):
    g = gen.random_strongly_connected(120, 200, seed=seed, max_length=5)
    beta = np.random.default_rng(seed).random(g.n) + 0.1
    beta[::7] = 0
    reach = dfs_reach(g)
    full = weighted_reachability_estimate(g, beta, 5, seed, prune=False, record=True)
    pruned = weighted_reachability_estimate(g, beta, 5, seed, prune=True, record=True)
    ranks = full.ranks
    for v in range(g.n):
        pos = sorted((u for u in reach[v] if beta[u] > 0), key=lambda u: (ranks[u], u))
        assert set(pruned.samples[v]) == set(pos[:5]) == set(full.samples[v])
    assert np.array_equal(full.S_hat, pruned.S_hat)
    assert pruned.scans <= 5 * g.n + g.n


def test_weighted_unit_weights_unbiased():
    g = gen.random_dag(200, 0.03, seed=5)
    _, R, _ = _truth(g)
    runs = np.array([weighted_reachability_estimate(g, np.ones(g.n), 16, s).R_hat for s in range(500)])
    se = runs.std(axis=0, ddof=1) / math.sqrt(len(runs))
    big = R >= 16
    assert np.all(np.abs(runs.mean(axis=0) - R)[big] <= 3 * se[big])
    assert np.array_equal(runs[0, ~big], R[~big].astype(float))


def test_weighted_reach_errors():
    g = gen.random_dag(10, 0.3, seed=0)
    with pytest.raises(ValueError):
        weighted_reachability_estimate(g, np.zeros(10), 3, 0)
    with pytest.raises(ValueError):
        weighted_reachability_estimate(g, np.ones(10), 1, 0)
    with pytest.raises(ValueError):
        weighted_reachability_estimate(g, -np.ones(10), 3, 0)
