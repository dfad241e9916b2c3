"""Closeness estimators for undirected graphs built from k shortest-path passes.

All estimators work on distance *sums* ``S(v) = sum_u d(v, u)``; the
centrality is ``(n - 1) / S``. Sampled nodes always get their exact sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _hybrid
from .graph import Graph, GraphError, multi_source_sssp, require_connected
from .rng import stream

#: Threshold grid tried per node by the grid-adaptive estimator.
DEFAULT_EPS_GRID = (0.001, 0.025, 0.05, 0.1, 0.2, 0.5, 0.99)


def default_eps(k: int) -> float:
    return math.sqrt(1.0 / k)


@dataclass(frozen=True)
class SampleSet:
    nodes: np.ndarray
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return len(self.nodes)

    @classmethod
    def of(cls, nodes, seed=None) -> "SampleSet":
        nodes = np.asarray(nodes, dtype=np.int64)
        if len(np.unique(nodes)) != len(nodes):
            raise ValueError("sample contains duplicate nodes")
        return cls(nodes, seed)


@dataclass
class EstimateTable:
    """Per-node estimated sums, centralities and squared-error estimates."""

    S_hat: np.ndarray
    sqerr: np.ndarray
    exact: np.ndarray
    numerator: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.numerator is None:
            self.numerator = np.full(len(self.S_hat), len(self.S_hat) - 1, dtype=np.float64)

    @property
    def n(self) -> int:
        return len(self.S_hat)

    @property
    def b_inv(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.S_hat > 0, self.numerator / self.S_hat, np.inf)


def sample_uniform(g: Graph, k: int, seed: int) -> SampleSet:
    """Uniform sample of ``k`` distinct nodes, reproducible from ``seed``."""
    if not 1 <= k <= g.n:
        raise ValueError(f"sample size k={k} must be in 1..{g.n}")
    nodes = stream(seed, "sample").choice(g.n, size=k, replace=False)
    return SampleSet(np.asarray(nodes, dtype=np.int64), seed)


def _check_inputs(g: Graph, C: SampleSet) -> None:
    if g.directed:
        raise GraphError("this estimator expects an undirected graph")
    if C.k < 1 or C.k > g.n or np.any((C.nodes < 0) | (C.nodes >= g.n)):
        raise ValueError("sample nodes out of range")
    require_connected(g)


def _exact_mask(n, C):
    m = np.zeros(n, dtype=bool)
    m[C.nodes] = True
    return m


def estimate_sampling(g: Graph, C: SampleSet) -> EstimateTable:
    """Scale the average distance to the sample up to ``n - 1`` nodes."""
    _check_inputs(g, C)
    n, k = g.n, C.k
    total = np.zeros(n, dtype=np.int64)
    total_sq = np.zeros(n, dtype=np.int64)
    S_hat = np.zeros(n)
    for c, d in zip(C.nodes.tolist(), _hybrid.sample_rows(g, C.nodes)):
        total += d
        total_sq += d * d
        S_hat[c] = d.sum()
    exact = _exact_mask(n, C)
    rows = ~exact
    # same operation order as the hybrid L-term so the two agree bit for bit
    S_hat[rows] = (total[rows] * (n - 1)) / k
    mean = total / k
    var = np.maximum(total_sq / k - mean * mean, 0.0)
    sqerr = np.where(rows, var * (n - 1) ** 2 / k, 0.0)
    return EstimateTable(S_hat, sqerr, exact)


def estimate_pivoting(g: Graph, C: SampleSet, variant: str = "plain") -> EstimateTable:
    """Estimate each node's sum by its pivot's exact sum.

    ``upper_bound`` adds ``(n - 1) * delta(v)``. The squared-error column holds
    the triangle-inequality slack ``((n - 1) * delta(v))**2``.
    """
    if variant not in ("plain", "upper_bound"):
        raise ValueError(f"unknown pivoting variant {variant!r}")
    _check_inputs(g, C)
    n = g.n
    S = np.zeros(n, dtype=np.int64)
    for c, d in zip(C.nodes.tolist(), _hybrid.sample_rows(g, C.nodes)):
        S[c] = d.sum()
    pa = multi_source_sssp(g, C.nodes)
    S_hat = S[pa.pivot].astype(np.float64)
    if variant == "upper_bound":
        S_hat = S_hat + (n - 1) * pa.delta
    exact = _exact_mask(n, C)
    S_hat[C.nodes] = S[C.nodes]
    sqerr = ((n - 1) * pa.delta.astype(np.float64)) ** 2
    sqerr[exact] = 0.0
    return EstimateTable(S_hat, sqerr, exact)


def _context(g: Graph, C: SampleSet) -> _hybrid.Context:
    pa = multi_source_sssp(g, C.nodes)
    return _hybrid.Context.build(g.n, C.nodes, pa.pivot, pa.delta)


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps={eps} must lie in (0, 1)")


def estimate_hybrid(g: Graph, C: SampleSet, eps: Optional[float] = None, engine: str = "streaming") -> EstimateTable:
    """Hybrid estimate with threshold ``delta(v) / eps`` around each pivot.

    Unsampled nodes farther than the threshold from the pivot are charged
    their pivot's distance, far sampled nodes count exactly, and near nodes are
    estimated from the near sampled nodes. ``engine`` is ``"streaming"``
    (settlement-event driven) or ``"array"`` (row-vectorised); both do ``k + 1``
    passes with constant state per node and give identical results.
    """
    eps = default_eps(C.k) if eps is None else float(eps)
    _check_eps(eps)
    _check_inputs(g, C)
    ctx = _context(g, C)
    sums = _hybrid.Sums(ctx, eps)
    if engine == "streaming":
        _hybrid.run_streaming(g, ctx, sums)
    elif engine == "array":
        _hybrid.run_array(ctx, _hybrid.sample_rows(g, C.nodes), [sums])
    else:
        raise ValueError(f"unknown engine {engine!r}")
    S_hat, err = _hybrid.finalize(sums)
    return EstimateTable(S_hat, err, ctx.in_C.copy())


def estimate_hybrid_multi(g: Graph, C: SampleSet, eps_list: Sequence[float]) -> list[EstimateTable]:
    """Hybrid estimates for several thresholds sharing the same passes."""
    for e in eps_list:
        _check_eps(e)
    _check_inputs(g, C)
    ctx = _context(g, C)
    sums = [_hybrid.Sums(ctx, e) for e in eps_list]
    _hybrid.run_array(ctx, _hybrid.sample_rows(g, C.nodes), sums)
    out = []
    for s in sums:
        S_hat, err = _hybrid.finalize(s)
        out.append(EstimateTable(S_hat, err, ctx.in_C.copy()))
    return out


def estimate_adaptive(
    g: Graph, C: SampleSet, mode: str = "eps_grid", eps_grid: Sequence[float] = DEFAULT_EPS_GRID
) -> EstimateTable:
    """Per node, keep the estimate with the smallest estimated squared error.

    ``eps_grid`` compares the hybrid estimates for each threshold factor in
    ``eps_grid`` (first one wins ties). ``full_sweep`` tries every distinct
    distance from the pivot to a sampled node as the threshold.
    """
    if mode == "eps_grid":
        eps_grid = list(eps_grid)
        if not eps_grid:
            raise ValueError("eps grid is empty")
        tables = estimate_hybrid_multi(g, C, eps_grid)
        errs = np.vstack([t.sqerr for t in tables])
        pick = np.argmin(errs, axis=0)
        cols = np.arange(g.n)
        S_hat = np.vstack([t.S_hat for t in tables])[pick, cols]
        return EstimateTable(S_hat, errs[pick, cols], tables[0].exact.copy())
    if mode == "full_sweep":
        _check_inputs(g, C)
        ctx = _context(g, C)
        S_hat, err = _hybrid.full_sweep(ctx, _hybrid.sample_rows(g, C.nodes))
        return EstimateTable(S_hat, err, ctx.in_C.copy())
    raise ValueError(f"unknown adaptive mode {mode!r}")
