"""Accuracy evaluation against the exact oracle.

Relative error is measured on distance sums, ``|S_hat - S| / S`` (the same as
the relative error of the average distance).
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimators import (
    DEFAULT_EPS_GRID,
    EstimateTable,
    default_eps,
    estimate_adaptive,
    estimate_hybrid,
    estimate_pivoting,
    estimate_sampling,
    sample_uniform,
)
from .exact import exact_all, exact_values
from .graph import Graph
from .rng import stream

METHODS = ("exact", "sampling", "pivoting", "pivoting-ub", "hybrid", "adaptive", "adaptive-sweep")
DEFAULT_ORACLE_CAP = 20_000


class OracleCapError(Exception):
    pass


def run_method(
    g: Graph,
    method: str,
    k: int,
    seed: int,
    eps: Optional[float] = None,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    engine: str = "array",
) -> EstimateTable:
    if method == "exact":
        ex = exact_all(g)
        S = ex.S.astype(np.float64)
        return EstimateTable(S, np.zeros(g.n), np.ones(g.n, dtype=bool))
    C = sample_uniform(g, k, seed)
    if method == "sampling":
        return estimate_sampling(g, C)
    if method == "pivoting":
        return estimate_pivoting(g, C, "plain")
    if method == "pivoting-ub":
        return estimate_pivoting(g, C, "upper_bound")
    if method == "hybrid":
        return estimate_hybrid(g, C, eps, engine=engine)
    if method == "adaptive":
        return estimate_adaptive(g, C, "eps_grid", eps_grid)
    if method == "adaptive-sweep":
        return estimate_adaptive(g, C, "full_sweep")
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def query_nodes(n: int, queries: int, seed: int) -> np.ndarray:
    """Distinct query nodes (all nodes when ``queries >= n``), sorted."""
    if queries >= n:
        return np.arange(n)
    return np.sort(stream(seed, "queries").choice(n, size=queries, replace=False))


@dataclass
class EvalReport:
    method: str
    params: dict
    graph_name: str
    k: int
    seed: int
    node_ids: np.ndarray
    exact_S: np.ndarray
    est_S: np.ndarray
    rel_err: np.ndarray
    est_ms: float = 0.0
    oracle_ms: float = 0.0

    @property
    def queries(self) -> int:
        return len(self.node_ids)

    @property
    def avg_rel_err(self) -> float:
        return float(np.mean(self.rel_err)) if len(self.rel_err) else math.nan

    @property
    def nrmse(self) -> float:
        return float(np.sqrt(np.mean(self.rel_err**2))) if len(self.rel_err) else math.nan

    def sorted_errors(self) -> np.ndarray:
        return np.sort(self.rel_err)

    def per_query_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node_id", "exact_S", "est_S", "rel_err"])
        for nid, s, e, r in zip(self.node_ids.tolist(), self.exact_S.tolist(), self.est_S.tolist(), self.rel_err.tolist()):
            w.writerow([nid, _num(s), _num(e), _num(r)])
        return buf.getvalue()

    def cumulative_csv(self) -> str:
        """Row ``i`` holds the ``i``-th smallest relative error."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "rel_err"])
        for i, r in enumerate(self.sorted_errors().tolist(), 1):
            w.writerow([i, _num(r)])
        return buf.getvalue()

    def summary(self, timing: bool = True) -> str:
        lines = [
            f"graph={self.graph_name}",
            f"method={self.method}",
            *(f"{key}={_num(val)}" for key, val in sorted(self.params.items())),
            f"k={self.k}",
            f"seed={self.seed}",
            f"queries={self.queries}",
            f"avg_rel_err={_num(self.avg_rel_err)}",
            f"nrmse={_num(self.nrmse)}",
            f"max_rel_err={_num(float(np.max(self.rel_err)) if len(self.rel_err) else math.nan)}",
        ]
        if timing:
            lines += [f"est_ms={self.est_ms:.3f}", f"oracle_ms={self.oracle_ms:.3f}"]
        return "\n".join(lines) + "\n"


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def evaluate(
    g: Graph,
    method: str,
    k: int,
    eps: Optional[float] = None,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    queries: int = 1000,
    seed: int = 0,
    graph_name: str = "",
    oracle_cap: int = DEFAULT_ORACLE_CAP,
    use_oracle: bool = True,
) -> EvalReport:
    """Run ``method`` and compare ``queries`` random nodes with their exact sums.

    Graphs above ``oracle_cap`` nodes are refused unless ``use_oracle`` is off,
    in which case the report carries estimates only (errors left as NaN).
    """
    if use_oracle and g.n > oracle_cap:
        raise OracleCapError(f"graph has {g.n} nodes, above the oracle cap of {oracle_cap}")
    params = {}
    if method == "hybrid":
        params["eps"] = default_eps(k) if eps is None else eps
    elif method == "adaptive":
        params["eps_grid"] = ",".join(_num(e) for e in eps_grid)
    t0 = time.perf_counter()
    table = run_method(g, method, k, seed, eps, eps_grid)
    est_ms = 1000 * (time.perf_counter() - t0)
    q = query_nodes(g.n, queries, seed)
    est = table.S_hat[q]
    oracle_ms = 0.0
    if use_oracle:
        t0 = time.perf_counter()
        exact = exact_values(g, q)
        oracle_ms = 1000 * (time.perf_counter() - t0)
        rel = np.abs(est - exact) / exact
    else:
        exact = np.full(len(q), math.nan)
        rel = np.full(len(q), math.nan)
    return EvalReport(method, params, graph_name, k, seed, g.ids[q], exact, est, rel, est_ms, oracle_ms)


@dataclass
class SweepRow:
    k: int
    eps: float
    nrmse: float
    avg_rel_err: float


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    tolerance: float = 0.10

    def monotone(self) -> bool:
        """True if NRMSE never rises by more than ``tolerance`` (relative) as k grows."""
        vals = [r.nrmse for r in self.rows]
        return all(b <= a * (1 + self.tolerance) + 1e-15 for a, b in zip(vals, vals[1:]))

    def violations(self) -> list[tuple[int, int]]:
        out = []
        for a, b in zip(self.rows, self.rows[1:]):
            if b.nrmse > a.nrmse * (1 + self.tolerance) + 1e-15:
                out.append((a.k, b.k))
        return out

    def tsv(self) -> str:
        lines = ["k\teps\tnrmse\tavg_rel_err"]
        for r in self.rows:
            lines.append(f"{r.k}\t{_num(r.eps)}\t{_num(r.nrmse)}\t{_num(r.avg_rel_err)}")
        lines.append(f"# monotone_within_{_num(self.tolerance)}={str(self.monotone()).lower()}")
        for a, b in self.violations():
            lines.append(f"# increase k={a}->{b}")
        return "\n".join(lines) + "\n"


def nrmse_sweep(
    g: Graph,
    ks: Sequence[int],
    seeds: int,
    base_seed: int = 0,
    method: str = "hybrid",
    exact: Optional[np.ndarray] = None,
    tolerance: float = 0.10,
) -> SweepResult:
    """NRMSE over all nodes and ``seeds`` runs for each sample size, with ``eps = sqrt(1/k)``."""
    S = exact_all(g).S if exact is None else np.asarray(exact)
    result = SweepResult(tolerance=tolerance)
    for k in ks:
        eps = default_eps(k)
        sq = 0.0
        ab = 0.0
        for s in range(seeds):
            table = run_method(g, method, k, base_seed + s, eps)
            rel = (table.S_hat - S) / S
            sq += float(np.sum(rel**2))
            ab += float(np.sum(np.abs(rel)))
        cnt = seeds * g.n
        result.rows.append(SweepRow(k, eps, math.sqrt(sq / cnt), ab / cnt))
    return result
