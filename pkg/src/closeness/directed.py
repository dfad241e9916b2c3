"""Directed graphs: round-trip hybrid estimates and reachability sketches.

The reachability estimators process nodes in a random (or weight-ranked)
order and run a reverse Dijkstra from each, adding the node to the sample of
every node that reaches it. A search stops expanding at nodes whose upstream
nodes are all known to hold ``k`` samples, so no node is expanded more than
``k + 1`` times.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _hybrid
from .estimators import EstimateTable, _check_eps, default_eps, sample_uniform
from .graph import INF, DisconnectedGraphError, Graph, GraphError, _distance_rows, transpose
from .rng import stream

DIRECTIONS = ("outbound", "inbound")
CARDINALITY_FORMULAS = ("unbiased", "shifted")


@dataclass
class ReachabilityEstimate:
    """Average distance ``B_hat`` and reachable-set size ``R_hat`` per node.

    ``exact`` marks nodes that collected fewer than ``k`` samples, for which
    both values are exact. ``scans`` counts node expansions over all searches.
    """

    B_hat: np.ndarray
    R_hat: np.ndarray
    count: np.ndarray
    T: np.ndarray
    k: int
    scans: int
    samples: Optional[list] = field(default=None, repr=False)

    @property
    def exact(self) -> np.ndarray:
        return self.count < self.k


@dataclass
class WeightedReachabilityEstimate:
    S_hat: np.ndarray
    R_hat: np.ndarray
    count: np.ndarray
    T: np.ndarray
    ranks: np.ndarray
    k: int
    scans: int
    samples: Optional[list] = field(default=None, repr=False)

    @property
    def exact(self) -> np.ndarray:
        return self.count < self.k


def roundtrip_rows(g: Graph, nodes) -> list[np.ndarray]:
    """Round-trip distance rows ``d(c, .) + d(., c)`` for each node ``c``."""
    gt = transpose(g)
    nodes = [int(c) for c in nodes]
    fwd = _distance_rows(g, nodes)
    bwd = _distance_rows(gt, nodes)
    rows = []
    for c, f, b in zip(nodes, fwd, bwd):
        bad = np.flatnonzero((f == INF) | (b == INF))
        if len(bad):
            v = int(bad[0])
            raise DisconnectedGraphError(
                c, v, f"graph is not strongly connected: nodes {c} and {v} are not mutually reachable"
            )
        rows.append(f + b)
    return rows


def roundtrip_hybrid(g: Graph, k: int, seed: int, eps: Optional[float] = None) -> EstimateTable:
    """Hybrid estimate of round-trip distance sums on a strongly connected digraph.

    Each sampled node gets one forward and one backward search; the round-trip
    distances then play the role of the undirected metric, with the pivot of a
    node being the sampled node of smallest round-trip distance (ties by id).
    """
    if not g.directed:
        raise GraphError("roundtrip_hybrid expects a directed graph")
    eps = default_eps(k) if eps is None else float(eps)
    _check_eps(eps)
    C = sample_uniform(g, k, seed)
    rows = roundtrip_rows(g, C.nodes)
    R = np.vstack(rows)
    order = np.argsort(C.nodes, kind="stable")
    # argmin over samples sorted by id returns the smallest id among ties
    best = np.argmin(R[order], axis=0)
    pivot = C.nodes[order][best]
    delta = R[order][best, np.arange(g.n)]
    ctx = _hybrid.Context.build(g.n, C.nodes, pivot, delta)
    sums = _hybrid.Sums(ctx, eps)
    _hybrid.run_array(ctx, rows, [sums])
    S_hat, err = _hybrid.finalize(sums)
    return EstimateTable(S_hat, err, ctx.in_C.copy())


def _search_graph(g: Graph, direction: str) -> Graph:
    if not g.directed:
        raise GraphError("reachability estimation expects a directed graph")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    # outbound samples of v are the nodes v reaches: search backwards from each source
    return transpose(g) if direction == "outbound" else g


def _pruned_searches(h: Graph, order, k: int, on_collect, prune: bool):
    """Run a Dijkstra from each node of ``order`` on ``h``.

    ``on_collect(v, u, d, step)`` is called for every settled ``v != u`` whose
    count is below ``k``. With ``prune`` a node is not expanded once ``k + 1``
    earlier searches (its own included) have settled it: every node upstream of
    it then already holds ``k`` samples other than itself. Pruning as soon as
    the count reaches ``k`` is not enough on graphs with cycles, where one of
    those samples can be the upstream node itself.
    Returns the per-node counts and the number of node expansions.
    """
    n = h.n
    indptr, indices, lengths = h.indptr.tolist(), h.indices.tolist(), h.lengths.tolist()
    count = [0] * n
    visits = [0] * n
    scans = 0
    seen = [-1] * n
    dist = [0] * n
    for step, u in enumerate(order):
        seen[u] = step
        dist[u] = 0
        heap = [(0, u)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            done = visits[v] > k
            visits[v] += 1
            if v != u and count[v] < k:
                count[v] += 1
                on_collect(v, u, d, count[v])
            if prune and done:
                continue
            scans += 1
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                nd = d + lengths[e]
                if seen[w] != step or nd < dist[w]:
                    seen[w] = step
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
    return count, scans


def reachability_estimate(
    g: Graph,
    k: int,
    seed: int,
    direction: str = "outbound",
    prune: bool = True,
    record: bool = False,
    cardinality: str = "unbiased",
) -> ReachabilityEstimate:
    """Per node, average distance to (and number of) nodes it reaches.

    Every node collects the first ``k`` reachable nodes of a seeded random
    order together with their distances. With fewer than ``k`` samples the
    values are exact; otherwise the set size is estimated from the position
    ``T`` of the ``k``-th sample among the other ``n - 1`` nodes.

    ``cardinality="unbiased"`` uses ``(k - 1)(n - 1) / (T - 1)``, whose mean
    is exactly the reachable count. ``"shifted"`` uses
    ``1 + (k - 1)(n - 2) / (T - 1)``, which overestimates a reachable count
    ``R`` by ``(n - 1 - R) / (n - 1)`` on average. Both are exact when every
    other node is reachable.
    """
    if k < 3:
        raise ValueError("reachability estimation needs k >= 3")
    if cardinality not in CARDINALITY_FORMULAS:
        raise ValueError(f"cardinality must be one of {CARDINALITY_FORMULAS}")
    h = _search_graph(g, direction)
    n = g.n
    order = stream(seed, "order").permutation(n).tolist()
    distsum = [0] * n
    T = [0] * n
    mark = [False] * n
    samples = [[] for _ in range(n)] if record else None
    pos = {}

    def collect(v, u, d, c):
        distsum[v] += d
        if record:
            samples[v].append(u)
        if c == k:
            t = pos[u]
            T[v] = t - 1 if mark[v] else t
            assert T[v] >= k

    # mark[u] must be set before the search from u, so wrap the order
    def marked_order():
        for t, u in enumerate(order, 1):
            pos[u] = t
            mark[u] = True
            yield u

    count, scans = _pruned_searches(h, marked_order(), k, collect, prune)
    count = np.asarray(count, dtype=np.int64)
    distsum = np.asarray(distsum, dtype=np.int64)
    T = np.asarray(T, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        B_hat = np.where(count > 0, distsum / np.maximum(count, 1), 0.0)
        if cardinality == "unbiased":
            full = (k - 1) * (n - 1) / (T - 1.0)
        else:
            full = 1 + (k - 1) * (n - 2) / (T - 1.0)
        R_hat = np.where(count < k, count.astype(np.float64), full)
    return ReachabilityEstimate(B_hat, R_hat, count, T, k, scans, samples)


def weighted_reachability_estimate(
    g: Graph,
    beta,
    k: int,
    seed: int,
    direction: str = "outbound",
    prune: bool = True,
    record: bool = False,
) -> WeightedReachabilityEstimate:
    """Bottom-k estimates of ``sum beta(u) d(v, u)`` and ``sum beta(u)`` over reachable ``u``.

    Positive-weight nodes are ranked by ``uniform(0, 1) / beta`` and processed
    in increasing rank (ties by node id). The first ``k - 1`` samples of a node
    are summed; the rank of its ``k``-th sample scales the estimate.
    """
    beta = np.asarray(beta, dtype=np.float64)
    if k < 2:
        raise ValueError("weighted reachability estimation needs k >= 2")
    if len(beta) != g.n or np.any(beta < 0):
        raise ValueError("weights must be one non-negative value per node")
    positive = np.flatnonzero(beta > 0)
    if not len(positive):
        raise ValueError("at least one node needs a positive weight")
    h = _search_graph(g, direction)
    n = g.n
    u01 = stream(seed, "rank").random(n)
    ranks = np.full(n, np.inf)
    ranks[positive] = u01[positive] / beta[positive]
    order = positive[np.lexsort((positive, ranks[positive]))].tolist()
    bl = beta.tolist()
    rl = ranks.tolist()
    distsum = [0.0] * n
    bcount = [0.0] * n
    T = [0.0] * n
    samples = [[] for _ in range(n)] if record else None

    def collect(v, u, d, c):
        if record:
            samples[v].append(u)
        if c < k:
            distsum[v] += bl[u] * d
            bcount[v] += bl[u]
        else:
            T[v] = rl[u]

    count, scans = _pruned_searches(h, order, k, collect, prune)
    count = np.asarray(count, dtype=np.int64)
    distsum = np.asarray(distsum)
    bcount = np.asarray(bcount)
    T = np.asarray(T)
    full = count >= k
    S_hat = np.where(count > 0, distsum, 0.0)
    R_hat = np.where(count > 0, bcount, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        S_hat = np.where(full, distsum / np.where(full, T, 1.0), S_hat)
        R_hat = np.where(full, (k - 1) / np.where(full, T, 1.0), R_hat)
    return WeightedReachabilityEstimate(S_hat, R_hat, count, T, ranks, k, scans, samples)
