"""Command-line front end.

Every command reads one graph, writes a tab-separated table (or CSV for
``eval``) with ``#`` header lines echoing the configuration, and is
deterministic given ``--seed``. Errors go to stderr as ``error[<kind>]: ...``;
usage errors exit with 2, input and computation errors with 1.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .directed import CARDINALITY_FORMULAS, DIRECTIONS, reachability_estimate, roundtrip_hybrid, weighted_reachability_estimate
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
from .evaluation import DEFAULT_ORACLE_CAP, METHODS, OracleCapError, evaluate, nrmse_sweep
from .exact import exact_all, exact_weighted_all
from .graph import FORMATS, DisconnectedGraphError, Graph, GraphError, largest_component, load_graph
from .rng import STREAM_LAYOUT
from .weighted import estimate_weighted_hybrid, load_node_weights, varopt_sample

ESTIMATE_METHODS = ("sampling", "pivoting", "pivoting-ub", "hybrid", "adaptive", "weighted-hybrid", "roundtrip")
DEFAULT_K = 100


class UsageError(Exception):
    pass


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-i", "--input", required=True, help="graph file")
    common.add_argument("--format", choices=FORMATS, default="edge-list", help="input format (default: %(default)s)")
    common.add_argument("--directed", action="store_true", help="read arcs as directed")
    common.add_argument(
        "--largest-component", action="store_true", help="restrict an undirected graph to its largest component"
    )
    common.add_argument("--seed", type=int, default=0, help="random seed (default: %(default)s)")
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument(
        "--threads", type=int, default=1, help="worker threads for exact computations; output does not depend on it"
    )

    sample = _Parser(add_help=False)
    sample.add_argument("--k", type=int, default=DEFAULT_K, help="sample size (default: %(default)s)")
    sample.add_argument("--eps", type=float, help="hybrid threshold factor in (0, 1) (default: sqrt(1/k))")
    sample.add_argument(
        "--eps-grid",
        type=_float_list,
        default=list(DEFAULT_EPS_GRID),
        help="comma-separated thresholds for grid-adaptive estimation (default: %s)"
        % ",".join(str(e) for e in DEFAULT_EPS_GRID),
    )

    weights = _Parser(add_help=False)
    weights.add_argument("--weights", help="node weight file with 'node_id weight' lines")
    weights.add_argument(
        "--default-weight", type=float, default=1.0, help="weight of nodes missing from --weights (default: %(default)s)"
    )

    p = _Parser(prog="closeness", description="Closeness centrality estimation on large graphs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("exact", parents=[common, weights], help="exact distance sums (one search per node)")

    sp = sub.add_parser("estimate", parents=[common, sample, weights], help="estimate distance sums for all nodes")
    sp.add_argument("--method", choices=ESTIMATE_METHODS, default="hybrid", help="estimator (default: %(default)s)")
    sp.add_argument(
        "--adaptive-mode",
        choices=("eps_grid", "full_sweep"),
        default="eps_grid",
        help="adaptive threshold choice (default: %(default)s)",
    )
    sp.add_argument(
        "--engine", choices=("streaming", "array"), default="streaming", help="hybrid pass engine (default: %(default)s)"
    )

    sp = sub.add_parser("reach", parents=[common, weights], help="reachability and average distance on digraphs")
    sp.add_argument("--k", type=int, default=DEFAULT_K, help="samples per node (default: %(default)s)")
    sp.add_argument("--direction", choices=DIRECTIONS, default="outbound", help="(default: %(default)s)")
    sp.add_argument(
        "--cardinality",
        choices=CARDINALITY_FORMULAS,
        default="unbiased",
        help="reachable-count formula for unweighted runs (default: %(default)s)",
    )

    sp = sub.add_parser("eval", parents=[common, sample], help="compare an estimator with exact sums on random queries")
    sp.add_argument("--method", choices=METHODS, default="hybrid", help="(default: %(default)s)")
    sp.add_argument("--queries", type=int, default=1000, help="number of query nodes (default: %(default)s)")
    sp.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP, help="largest n for the exact oracle")
    sp.add_argument("--no-oracle", action="store_true", help="skip the oracle; errors are reported as nan")
    sp.add_argument("--cdf", help="write the sorted-error CSV here")
    sp.add_argument("--summary", help="write the key=value summary here")
    sp.add_argument("--timing", action="store_true", help="include wall-clock times in the summary")

    sp = sub.add_parser("sweep", parents=[common], help="NRMSE of an estimator over several sample sizes")
    sp.add_argument("--ks", type=_int_list, default=[8, 16, 32, 64], help="comma-separated sample sizes")
    sp.add_argument("--seeds", type=int, default=10, help="runs per sample size (default: %(default)s)")
    sp.add_argument("--method", choices=[m for m in METHODS if m != "exact"], default="hybrid")
    sp.add_argument("--tolerance", type=float, default=0.10, help="allowed relative NRMSE increase")
    return p


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _validate(args) -> None:
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if getattr(args, "k", 1) < 1:
        raise UsageError("--k must be positive")
    eps = getattr(args, "eps", None)
    if eps is not None and not 0.0 < eps < 1.0:
        raise UsageError("--eps must lie in (0, 1)")
    for e in getattr(args, "eps_grid", None) or []:
        if not 0.0 < e < 1.0:
            raise UsageError("--eps-grid values must lie in (0, 1)")
    if getattr(args, "default_weight", 1.0) < 0 or not math.isfinite(getattr(args, "default_weight", 1.0)):
        raise UsageError("--default-weight must be finite and non-negative")
    if args.largest_component and args.directed:
        raise UsageError("--largest-component applies to undirected graphs only")
    cmd = args.command
    if cmd == "estimate":
        if args.method == "roundtrip" and not args.directed:
            raise UsageError("--method roundtrip needs --directed")
        if args.method != "roundtrip" and args.directed:
            raise UsageError(f"--method {args.method} needs an undirected graph")
        if args.weights and args.method != "weighted-hybrid":
            raise UsageError("--weights is only used by --method weighted-hybrid")
    if cmd == "exact" and args.weights and args.directed:
        raise UsageError("weighted exact sums need an undirected graph")
    if cmd == "reach":
        if not args.directed:
            raise UsageError("reach needs --directed")
        if args.k < 3 and not args.weights:
            raise UsageError("reach needs --k of at least 3")
        if args.k < 2:
            raise UsageError("weighted reach needs --k of at least 2")
    if cmd in ("eval", "sweep") and args.directed:
        raise UsageError(f"{cmd} needs an undirected graph")
    if cmd == "eval" and args.queries < 1:
        raise UsageError("--queries must be positive")
    if cmd == "sweep":
        if args.seeds < 1:
            raise UsageError("--seeds must be positive")
        if any(k < 2 for k in args.ks):
            raise UsageError("--ks values must be at least 2 (the threshold sqrt(1/k) must be below 1)")


def _config_echo(args) -> list[str]:
    skip = {"threads", "output", "command"}
    out = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        val = getattr(args, key)
        if isinstance(val, list):
            val = ",".join(_num(v) if not isinstance(v, str) else v for v in val)
        elif isinstance(val, float):
            val = _num(val)
        out.append(f"{key}={val}")
    return out


def _header(args, extra: Sequence[str] = ()) -> str:
    lines = [
        f"# closeness {__version__}",
        f"# command: {args.command}",
        "# config: " + " ".join(_config_echo(args)),
        *(f"# {x}" for x in extra),
        f"# seed: {args.seed}",
        f"# rng: {STREAM_LAYOUT}",
    ]
    return "\n".join(lines) + "\n"


@contextmanager
def _open_out(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError("io", f"cannot write {path}: {exc.strerror or exc}") from None
    with fh:
        yield fh


def _load(args) -> Graph:
    try:
        g = load_graph(args.input, args.format, args.directed)
    except FileNotFoundError:
        raise CliError("io", f"cannot read {args.input}: no such file") from None
    except OSError as exc:
        raise CliError("io", f"cannot read {args.input}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise CliError("input", f"{args.input}: not a text file") from None
    if args.largest_component:
        g = largest_component(g)[0]
    if g.n == 0:
        raise CliError("input", f"{args.input}: graph has no nodes")
    return g


def _weights(args, g: Graph) -> np.ndarray:
    if not args.weights:
        return np.full(g.n, float(args.default_weight))
    try:
        return load_node_weights(args.weights, g, args.default_weight)
    except OSError as exc:
        raise CliError("io", f"cannot read {args.weights}: {exc.strerror or exc}") from None


def _check_k(k: int, g: Graph) -> None:
    if k > g.n:
        raise UsageError(f"--k={k} exceeds the number of nodes ({g.n})")


def _check_default_eps(args, k: int) -> None:
    if k == 1 and args.eps is None:
        raise UsageError("the default --eps is sqrt(1/k), which is 1 for k=1; pass --eps explicitly")


def _write_table(fh, header: str, g: Graph, t: EstimateTable) -> None:
    fh.write(header)
    fh.write("node_id\tS_hat\tB_inv_hat\tsqerr_est\texact_flag\n")
    ids = g.ids.tolist()
    for i, s, b, e, x in zip(ids, t.S_hat.tolist(), t.b_inv.tolist(), t.sqerr.tolist(), t.exact.tolist()):
        fh.write(f"{i}\t{_num(s)}\t{_num(b)}\t{_num(e)}\t{int(x)}\n")


def _cmd_exact(args, g: Graph) -> None:
    if args.weights:
        beta = _weights(args, g)
        S = exact_weighted_all(g, beta, threads=args.threads).astype(np.float64)
        t = EstimateTable(S, np.zeros(g.n), np.ones(g.n, dtype=bool), numerator=beta.sum() - beta)
    else:
        ex = exact_all(g, allow_unreachable=g.directed, threads=args.threads)
        t = EstimateTable(ex.S.astype(np.float64), np.zeros(g.n), np.ones(g.n, dtype=bool))
        if g.directed:
            # average over the reachable nodes, like the reach command
            t.numerator = ex.reach.astype(np.float64)
    with _open_out(args.output) as fh:
        _write_table(fh, _header(args, [f"nodes: {g.n}"]), g, t)


def _cmd_estimate(args, g: Graph) -> None:
    _check_k(args.k, g)
    m = args.method
    if m in ("hybrid", "weighted-hybrid", "roundtrip"):
        _check_default_eps(args, args.k)
    eps = default_eps(args.k) if args.eps is None else args.eps
    extra = [f"nodes: {g.n}"]
    if m in ("hybrid", "weighted-hybrid", "roundtrip"):
        extra.append(f"eps: {_num(eps)}")
    if m == "roundtrip":
        t = roundtrip_hybrid(g, args.k, args.seed, eps)
    elif m == "weighted-hybrid":
        beta = _weights(args, g)
        W = varopt_sample(beta, args.k, args.seed)
        extra.append(f"tau: {_num(W.tau)}")
        t = estimate_weighted_hybrid(g, beta, W, eps)
    else:
        C = sample_uniform(g, args.k, args.seed)
        if m == "sampling":
            t = estimate_sampling(g, C)
        elif m == "pivoting":
            t = estimate_pivoting(g, C, "plain")
        elif m == "pivoting-ub":
            t = estimate_pivoting(g, C, "upper_bound")
        elif m == "hybrid":
            t = estimate_hybrid(g, C, eps, engine=args.engine)
        else:
            t = estimate_adaptive(g, C, args.adaptive_mode, args.eps_grid)
    with _open_out(args.output) as fh:
        _write_table(fh, _header(args, extra), g, t)


def _cmd_reach(args, g: Graph) -> None:
    ids = g.ids.tolist()
    if args.weights:
        beta = _weights(args, g)
        r = weighted_reachability_estimate(g, beta, args.k, args.seed, args.direction)
        cols, first = "node_id\tS_hat\tR_hat\tcount\texact_flag\n", r.S_hat
    else:
        r = reachability_estimate(g, args.k, args.seed, args.direction, cardinality=args.cardinality)
        cols, first = "node_id\tB_hat\tR_hat\tcount\texact_flag\n", r.B_hat
    with _open_out(args.output) as fh:
        fh.write(_header(args, [f"nodes: {g.n}", f"scans: {r.scans}"]))
        fh.write(cols)
        for i, a, b, c, x in zip(ids, first.tolist(), r.R_hat.tolist(), r.count.tolist(), r.exact.tolist()):
            fh.write(f"{i}\t{_num(a)}\t{_num(b)}\t{c}\t{int(x)}\n")


def _cmd_eval(args, g: Graph) -> None:
    if args.method != "exact":
        _check_k(args.k, g)
    if args.method == "hybrid":
        _check_default_eps(args, args.k)
    try:
        rep = evaluate(
            g,
            args.method,
            args.k,
            args.eps,
            args.eps_grid,
            queries=args.queries,
            seed=args.seed,
            graph_name=args.input,
            oracle_cap=args.oracle_cap,
            use_oracle=not args.no_oracle,
        )
    except OracleCapError as exc:
        raise UsageError(f"{exc}; raise --oracle-cap or pass --no-oracle") from None
    with _open_out(args.output) as fh:
        fh.write(rep.per_query_csv())
    if args.cdf:
        with _open_out(args.cdf) as fh:
            fh.write(rep.cumulative_csv())
    if args.summary:
        with _open_out(args.summary) as fh:
            fh.write(rep.summary(timing=args.timing))


def _cmd_sweep(args, g: Graph) -> None:
    for k in args.ks:
        _check_k(k, g)
    exact = exact_all(g, threads=args.threads).S
    res = nrmse_sweep(g, args.ks, args.seeds, args.seed, args.method, exact=exact, tolerance=args.tolerance)
    with _open_out(args.output) as fh:
        fh.write(_header(args, [f"nodes: {g.n}"]))
        fh.write(res.tsv())


_COMMANDS = {
    "exact": _cmd_exact,
    "estimate": _cmd_estimate,
    "reach": _cmd_reach,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    g = None
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        g = _load(args)
        _COMMANDS[args.command](args, g)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 2
    except CliError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return 1
    except DisconnectedGraphError as exc:
        u, v = exc.u, exc.v
        if g is not None:
            u, v = int(g.ids[u]), int(g.ids[v])
        what = "strongly connected" if g is not None and g.directed else "connected"
        print(f"error[disconnected]: graph is not {what}: nodes {u} and {v} are not mutually reachable", file=sys.stderr)
        return 1
    except GraphError as exc:
        print(f"error[input]: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OverflowError) as exc:
        print(f"error[compute]: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
