"""Exact distance sums by one shortest-path run per node (test oracle scale)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import INF, Graph, GraphError, _distance_rows, require_connected

_CHUNK = 256


@dataclass(frozen=True)
class ExactCentrality:
    """Per-node exact distance sum ``S`` and centrality ``(n-1)/S``.

    For directed graphs run with ``allow_unreachable``, ``S`` sums over the
    reachable nodes only and ``reach`` holds the number of nodes reached
    (excluding the node itself).
    """

    S: np.ndarray
    reach: np.ndarray

    @property
    def n(self) -> int:
        return len(self.S)

    @property
    def b_inv(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.S > 0, (self.n - 1) / np.maximum(self.S, 1), np.inf)


def _row_reduce(g: Graph, fn, threads: int):
    chunks = [np.arange(i, min(i + _CHUNK, g.n)) for i in range(0, g.n, _CHUNK)]

    def work(rows):
        return fn(_distance_rows(g, rows))

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return parts


def exact_all(g: Graph, allow_unreachable: bool = False, threads: int = 1) -> ExactCentrality:
    """Exact ``S(v) = sum_u d(v, u)`` for every node."""
    if not g.directed and not allow_unreachable:
        require_connected(g)

    def reduce(D):
        fin = D != INF
        S = np.where(fin, D, 0).sum(axis=1)
        reach = fin.sum(axis=1) - 1
        return S, reach

    parts = _row_reduce(g, reduce, threads)
    if not parts:
        return ExactCentrality(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    S = np.concatenate([p[0] for p in parts]).astype(np.int64)
    reach = np.concatenate([p[1] for p in parts]).astype(np.int64)
    if not allow_unreachable and np.any(reach != g.n - 1):
        v = int(np.flatnonzero(reach != g.n - 1)[0])
        raise GraphError(f"node {v} does not reach every other node")
    return ExactCentrality(S, reach)


def exact_weighted_all(g: Graph, beta, threads: int = 1) -> np.ndarray:
    """Exact ``S_beta(v) = sum_{j != v} beta(j) d(v, j)`` for every node."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (g.n,):
        raise ValueError(f"expected {g.n} weights, got {beta.shape}")
    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise ValueError("node weights must be finite and non-negative")
    if not g.directed:
        require_connected(g)

    def reduce(D):
        if np.any(D == INF):
            raise GraphError("weighted sums need every node to reach every other node")
        return D.astype(np.float64) @ beta

    parts = _row_reduce(g, reduce, threads)
    return np.concatenate(parts) if parts else np.zeros(0)


def exact_values(g: Graph, nodes: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact ``S`` for a subset of nodes only."""
    nodes = np.arange(g.n) if nodes is None else np.asarray(nodes)
    out = np.empty(len(nodes), dtype=np.int64)
    for i in range(0, len(nodes), _CHUNK):
        D = _distance_rows(g, nodes[i : i + _CHUNK])
        if np.any(D == INF):
            raise GraphError("graph is not connected")
        out[i : i + _CHUNK] = D.sum(axis=1)
    return out
