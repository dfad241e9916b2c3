import numpy as np
import pytest

from closeness import generators as gen
from closeness.exact import exact_all, exact_values, exact_weighted_all
from closeness.graph import DisconnectedGraphError, Graph

from oracles import floyd_warshall, int_matrix


def test_path():
    ex = exact_all(gen.path(3))
    assert ex.S.tolist() == [3, 2, 3]
    assert ex.b_inv[1] == 1.0


def test_star():
    ex = exact_all(gen.star(11))
    assert ex.S[0] == 10
    assert set(ex.S[1:].tolist()) == {19}


def test_clique():
    assert set(exact_all(gen.clique(9)).S.tolist()) == {8}


@pytest.mark.parametrize("seed", range(3))
def test_matches_floyd_warshall(seed):
    g = gen.connected_random(300, 400, seed=seed, max_length=1 + 20 * (seed % 2))
    D = int_matrix(floyd_warshall(g))
    ex = exact_all(g)
    assert np.array_equal(ex.S, D.sum(axis=1))
    # undirected: row sums equal column sums
    assert np.array_equal(D.sum(axis=0), D.sum(axis=1))


def test_threads_do_not_change_results():
    g = gen.connected_random(600, 900, seed=4, max_length=9)
    assert np.array_equal(exact_all(g).S, exact_all(g, threads=4).S)
    beta = np.random.default_rng(0).random(g.n)
    assert np.array_equal(exact_weighted_all(g, beta), exact_weighted_all(g, beta, threads=3))


def test_rejects_disconnected():
    with pytest.raises(DisconnectedGraphError):
        exact_all(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_directed_reach_counts():
    g = Graph.from_edges(3, [(0, 1, 2), (1, 2, 3)], directed=True)
    ex = exact_all(g, allow_unreachable=True)
    assert ex.S.tolist() == [7, 3, 0]
    assert ex.reach.tolist() == [2, 1, 0]


def test_weighted_reduces_to_unweighted():
    g = gen.connected_random(80, 100, seed=1, max_length=5)
    assert np.array_equal(exact_weighted_all(g, np.ones(g.n)), exact_all(g).S)


def test_weighted_indicator():
    g = gen.connected_random(50, 60, seed=2, max_length=5)
    z = 17
    beta = np.zeros(g.n)
    beta[z] = 1.0
    D = int_matrix(floyd_warshall(g))
    Sb = exact_weighted_all(g, beta)
    assert np.array_equal(Sb, D[:, z].astype(float))


def test_weighted_matches_reference():
    g = gen.connected_random(120, 150, seed=3, max_length=7)
    beta = np.random.default_rng(3).integers(0, 10, g.n).astype(float)
    D = int_matrix(floyd_warshall(g))
    # the weight belongs to the other endpoint; d(v, v) = 0 drops v itself
    assert np.allclose(exact_weighted_all(g, beta), D @ beta, rtol=1e-12)


def test_weighted_rejects_negative():
    with pytest.raises(ValueError):
        exact_weighted_all(gen.path(3), [1, -1, 1])


def test_exact_values_subset():
    g = gen.connected_random(70, 50, seed=5)
    nodes = np.array([3, 9, 40])
    assert np.array_equal(exact_values(g, nodes), exact_all(g).S[nodes])
