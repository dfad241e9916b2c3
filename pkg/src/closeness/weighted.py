"""Node-weighted closeness: VarOpt sampling and the weighted hybrid estimate."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _hybrid
from .estimators import EstimateTable, _check_eps, _check_inputs, default_eps
from .graph import Graph, GraphError, multi_source_sssp
from .rng import stream


@dataclass(frozen=True)
class WeightedSample:
    """Exactly ``k`` nodes drawn with inclusion probability ``min(1, beta/tau)``.

    ``adjusted`` is aligned with ``nodes`` and holds ``max(tau, beta)``.
    """

    nodes: np.ndarray
    tau: float
    adjusted: np.ndarray
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return len(self.nodes)

    def adjusted_full(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.nodes] = self.adjusted
        return out


def _as_weights(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 1:
        raise ValueError("weights must be a 1-d array")
    if np.any(beta < 0) or not np.all(np.isfinite(beta)):
        raise ValueError("weights must be finite and non-negative")
    return beta


def varopt_threshold(beta, k: int) -> float:
    """The ``tau`` with ``sum_v min(1, beta(v)/tau) == k``.

    Walks the weights in decreasing order; the first prefix whose next weight
    falls at or below the mean of the remaining mass over the remaining slots
    fixes ``tau``. Integer weights are compared exactly.
    """
    beta = _as_weights(beta)
    pos = np.sort(beta[beta > 0])[::-1]
    if len(pos) < k:
        raise ValueError(f"need at least k={k} positive weights, found {len(pos)}")
    if k < 1:
        raise ValueError("k must be positive")
    if len(pos) == k:
        return float(pos[-1])
    if np.all(pos == np.round(pos)):
        vals = [int(x) for x in pos]
    else:
        vals = pos.tolist()
    rest = sum(vals) if isinstance(vals[0], int) else float(np.sum(pos))
    for m in range(k):
        if vals[m] * (k - m) <= rest:
            if isinstance(rest, int):
                return float(Fraction(rest, k - m))
            return rest / (k - m)
        rest -= vals[m]
    raise AssertionError("unreachable: threshold search exhausted")


def varopt_sample(beta, k: int, seed: int) -> WeightedSample:
    """Weighted sample of exactly ``k`` nodes.

    Nodes with ``beta >= tau`` are always taken; the remaining slots are
    filled by systematic sampling over the lighter nodes in a random order, which
    gives each of them inclusion probability ``beta / tau``.
    """
    beta = _as_weights(beta)
    tau = varopt_threshold(beta, k)
    rng = stream(seed, "varopt")
    heavy = np.flatnonzero(beta >= tau)
    light = np.flatnonzero((beta > 0) & (beta < tau))
    slots = k - len(heavy)
    chosen = [heavy]
    if slots > 0:
        light = rng.permutation(light)
        cum = np.cumsum(beta[light] / tau)
        cum *= slots / cum[-1]
        points = rng.random() + np.arange(slots)
        idx = np.minimum(np.searchsorted(cum, points, side="right"), len(light) - 1)
        chosen.append(light[idx])
    nodes = np.sort(np.concatenate(chosen)).astype(np.int64)
    if len(np.unique(nodes)) != k:
        raise AssertionError("VarOpt produced a sample of the wrong size")
    return WeightedSample(nodes, tau, np.maximum(tau, beta[nodes]), seed)


def estimate_weighted_hybrid(
    g: Graph, beta, W: WeightedSample, eps: Optional[float] = None
) -> EstimateTable:
    """Hybrid estimate of ``S_beta(v) = sum_{u != v} beta(u) d(v, u)``.

    Far unsampled nodes contribute ``beta(u)`` times their distance from the
    pivot, far sampled nodes ``beta(c) d(v, c)``, and near sampled nodes their
    adjusted weight ``max(tau, beta(c))`` times the distance. The error column
    uses weighted masses in place of set sizes plus the inverse-probability
    variance of the near part. ``numerator`` is ``sum(beta) - beta(v)``.
    """
    beta = _as_weights(beta)
    if len(beta) != g.n:
        raise ValueError(f"expected {g.n} weights, got {len(beta)}")
    eps = default_eps(W.k) if eps is None else float(eps)
    _check_eps(eps)
    _check_inputs(g, W)
    pa = multi_source_sssp(g, W.nodes)
    ctx = _hybrid.Context.build(g.n, W.nodes, pa.pivot, pa.delta)
    sums = _hybrid.Sums(ctx, eps, weight=beta, adjusted=W.adjusted_full(g.n), tau=W.tau)
    _hybrid.run_array(ctx, _hybrid.sample_rows(g, W.nodes), [sums])
    S_hat, err = _hybrid.finalize(sums)
    return EstimateTable(S_hat, err, ctx.in_C.copy(), numerator=beta.sum() - beta)


def load_node_weights(path, g: Graph, default: float = 1.0) -> np.ndarray:
    """Read ``node_id weight`` lines; nodes not listed get ``default``."""
    pos = {int(x): i for i, x in enumerate(g.ids.tolist())}
    beta = np.full(g.n, float(default))
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected 'node_id weight'")
            try:
                nid, w = int(parts[0]), float(parts[1])
            except ValueError:
                raise GraphError(f"{path}:{lineno}: malformed weight line") from None
            if nid not in pos:
                raise GraphError(f"{path}:{lineno}: unknown node id {nid}")
            if not (w >= 0 and np.isfinite(w)):
                raise GraphError(f"{path}:{lineno}: weight must be finite and non-negative")
            beta[pos[nid]] = w
    return beta
