"""Graph storage, file parsing and shortest-path kernels.

Graphs are immutable CSR structures with non-negative integer edge lengths.
Node ids are contiguous ``0..n-1``; the original input ids are kept in
``Graph.ids`` so results can be written back in the caller's id space.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra

#: Distance value for unreachable nodes.
INF = np.iinfo(np.int64).max
#: Largest admissible edge length (lengths are unsigned 32-bit).
MAX_LENGTH = 2**32 - 1

FORMATS = ("dimacs-gr", "edge-list", "weighted-edge-list")


class GraphError(Exception):
    """Base class for graph input and precondition errors."""


class GraphParseError(GraphError):
    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class DisconnectedGraphError(GraphError):
    """Raised when an estimator that needs a connected graph gets one that is not.

    ``u`` and ``v`` are two (internal) node ids with no path between them.
    """

    def __init__(self, u: int, v: int, message: Optional[str] = None):
        self.u = u
        self.v = v
        super().__init__(message or f"graph is not connected: no path between nodes {u} and {v}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable adjacency structure in CSR form.

    Undirected graphs store every edge in both directions; ``m`` counts each
    undirected edge once. Parallel edges are collapsed to their minimum length
    and self-loops are dropped at construction since neither affects distances.
    """

    n: int
    directed: bool
    indptr: np.ndarray
    indices: np.ndarray
    lengths: np.ndarray
    ids: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        nnz = len(self.indices)
        return nnz if self.directed else nnz // 2

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence[int]],
        directed: bool = False,
        ids: Optional[Sequence[int]] = None,
    ) -> "Graph":
        """Build a graph from ``(u, v)`` or ``(u, v, length)`` tuples over ``0..n-1``."""
        rows, cols, lens = [], [], []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = int(e[2]) if len(e) > 2 else 1
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if w < 0:
                raise GraphError(f"negative length {w} on edge ({u}, {v})")
            if w > MAX_LENGTH:
                raise GraphError(f"length {w} on edge ({u}, {v}) exceeds 32 bits")
            rows.append(u)
            cols.append(v)
            lens.append(w)
        return cls.from_arrays(
            n,
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(lens, dtype=np.int64),
            directed=directed,
            ids=ids,
        )

    @classmethod
    def from_arrays(cls, n, rows, cols, lens, directed=False, ids=None) -> "Graph":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        lens = np.asarray(lens, dtype=np.int64)
        keep = rows != cols
        rows, cols, lens = rows[keep], cols[keep], lens[keep]
        if not directed:
            rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
            lens = np.concatenate([lens, lens])
        # sort by (row, col, length) and keep the shortest of each parallel group
        order = np.lexsort((lens, cols, rows))
        rows, cols, lens = rows[order], cols[order], lens[order]
        if len(rows):
            first = np.ones(len(rows), dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            rows, cols, lens = rows[first], cols[first], lens[first]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) != n:
            raise GraphError(f"id mapping has {len(ids)} entries for n={n}")
        for a in (indptr, cols, lens, ids):
            a.setflags(write=False)
        return cls(n=n, directed=directed, indptr=indptr, indices=cols, lengths=lens, ids=ids)

    def adjacency(self, v: int) -> list[tuple[int, int]]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.lengths[lo:hi].tolist()))

    def edges(self) -> Iterator[tuple[int, int, int]]:
        """Yield stored edges; undirected edges are yielded once with ``u < v``."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        for u, v, w in zip(src.tolist(), self.indices.tolist(), self.lengths.tolist()):
            if self.directed or u < v:
                yield u, v, w

    def csr(self) -> csr_matrix:
        # stored zeros must survive: scipy's csgraph treats them as zero-length edges
        return csr_matrix(
            (self.lengths.astype(np.float64), self.indices, self.indptr), shape=(self.n, self.n)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.directed == other.directed
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.lengths, other.lengths)
            and np.array_equal(self.ids, other.ids)
        )

    __hash__ = None


@dataclass(frozen=True)
class VisitEvent:
    node: int
    dist: int
    index: int


@dataclass(frozen=True)
class DistanceArray:
    source: int
    dist: np.ndarray

    def reachable(self) -> np.ndarray:
        return self.dist != INF


@dataclass(frozen=True)
class PivotAssignment:
    """Closest source ``pivot[v]`` and its distance ``delta[v]`` for every node.

    Nodes not reachable from any source have ``pivot == -1`` and ``delta == INF``.
    """

    pivot: np.ndarray
    delta: np.ndarray

    @property
    def unreachable(self) -> np.ndarray:
        return self.pivot < 0


# ---------------------------------------------------------------- parsing


def _parse_int(tok: str, path, lineno: int, what: str) -> int:
    try:
        val = int(tok)
    except ValueError:
        raise GraphParseError(path, lineno, f"{what} {tok!r} is not an integer") from None
    return val


def _check_id(val: int, path, lineno: int) -> int:
    if not (-(2**63) <= val < 2**63):
        raise GraphParseError(path, lineno, f"node id {val} overflows 64 bits")
    return val


def _check_length(val: int, path, lineno: int) -> int:
    if val < 0:
        raise GraphParseError(path, lineno, f"negative length {val}")
    if val > MAX_LENGTH:
        raise GraphParseError(path, lineno, f"length {val} exceeds 32 bits")
    return val


def load_graph(path, format: str = "edge-list", directed: bool = False) -> Graph:
    """Read a graph file.

    ``dimacs-gr`` uses the ``p sp n m`` / ``a u v w`` layout with 1-based ids,
    which map to ``id - 1`` (isolated declared nodes are kept). The edge-list
    formats take whitespace-separated ``u v`` (``edge-list``, length 1) or
    ``u v w`` (``weighted-edge-list``) lines with arbitrary 64-bit ids,
    remapped in order of first appearance. ``#`` lines are comments.
    """
    if format not in FORMATS:
        raise GraphError(f"unknown format {format!r}; expected one of {', '.join(FORMATS)}")
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    if format == "dimacs-gr":
        return _load_dimacs(path, lines, directed)
    return _load_edge_list(path, lines, directed, weighted=format == "weighted-edge-list")


def _load_dimacs(path, lines, directed):
    n = None
    rows, cols, lens = [], [], []
    for lineno, line in enumerate(lines, 1):
        parts = line.split()
        if not parts or parts[0] in ("c", "#") or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "p":
            if len(parts) != 4 or parts[1] != "sp":
                raise GraphParseError(path, lineno, "expected 'p sp <n> <m>'")
            if n is not None:
                raise GraphParseError(path, lineno, "duplicate problem line")
            n = _parse_int(parts[2], path, lineno, "node count")
            _parse_int(parts[3], path, lineno, "arc count")
            if n < 0:
                raise GraphParseError(path, lineno, "negative node count")
        elif tag == "a":
            if n is None:
                raise GraphParseError(path, lineno, "arc before problem line")
            if len(parts) != 4:
                raise GraphParseError(path, lineno, "expected 'a <u> <v> <w>'")
            u = _parse_int(parts[1], path, lineno, "node id")
            v = _parse_int(parts[2], path, lineno, "node id")
            w = _check_length(_parse_int(parts[3], path, lineno, "length"), path, lineno)
            for x in (u, v):
                _check_id(x, path, lineno)
                if not 1 <= x <= n:
                    raise GraphParseError(path, lineno, f"node id {x} outside 1..{n}")
            rows.append(u - 1)
            cols.append(v - 1)
            lens.append(w)
        else:
            raise GraphParseError(path, lineno, f"unknown line type {tag!r}")
    if n is None:
        raise GraphParseError(path, len(lines), "missing problem line")
    return Graph.from_arrays(n, rows, cols, lens, directed=directed, ids=np.arange(1, n + 1))


def _load_edge_list(path, lines, directed, weighted):
    index: dict[int, int] = {}
    rows, cols, lens = [], [], []
    for lineno, line in enumerate(lines, 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        need = 3 if weighted else 2
        if len(parts) < need:
            raise GraphParseError(path, lineno, f"expected at least {need} columns")
        u = _check_id(_parse_int(parts[0], path, lineno, "node id"), path, lineno)
        v = _check_id(_parse_int(parts[1], path, lineno, "node id"), path, lineno)
        w = 1
        if weighted:
            w = _check_length(_parse_int(parts[2], path, lineno, "length"), path, lineno)
        rows.append(index.setdefault(u, len(index)))
        cols.append(index.setdefault(v, len(index)))
        lens.append(w)
    ids = np.fromiter(index.keys(), dtype=np.int64, count=len(index))
    return Graph.from_arrays(len(index), rows, cols, lens, directed=directed, ids=ids)


def write_edge_list(g: Graph, path, weighted: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, w in g.edges():
            a, b = g.ids[u], g.ids[v]
            fh.write(f"{a} {b} {w}\n" if weighted else f"{a} {b}\n")


# ---------------------------------------------------------------- operations


def transpose(g: Graph) -> Graph:
    if not g.directed:
        raise GraphError("transpose requires a directed graph")
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    return Graph.from_arrays(g.n, g.indices, src, g.lengths, directed=True, ids=g.ids)


def _distance_rows(g: Graph, sources) -> np.ndarray:
    """Distance matrix rows (int64, ``INF`` for unreachable) for ``sources``."""
    d = dijkstra(g.csr(), directed=True, indices=sources)
    out = np.full(d.shape, INF, dtype=np.int64)
    finite = np.isfinite(d)
    out[finite] = d[finite].astype(np.int64)
    return out


def distances_from(g: Graph, source: int) -> np.ndarray:
    return _distance_rows(g, [source])[0]


def settlement_order(dist: np.ndarray) -> np.ndarray:
    """Reachable nodes by increasing distance, ties by ascending node id."""
    reach = np.flatnonzero(dist != INF)
    return reach[np.argsort(dist[reach], kind="stable")]


def sssp(
    g: Graph, source: int, on_visit: Optional[Callable[[VisitEvent], None]] = None
) -> DistanceArray:
    """Exact single-source distances.

    If ``on_visit`` is given it receives one ``VisitEvent`` per reachable node in
    settlement order (distance, then node id).
    """
    if not 0 <= source < g.n:
        raise GraphError(f"source {source} out of range")
    dist = distances_from(g, source)
    dist.setflags(write=False)
    if on_visit is not None:
        for i, v in enumerate(settlement_order(dist).tolist()):
            on_visit(VisitEvent(v, int(dist[v]), i))
    return DistanceArray(source, dist)


def multi_source_sssp(g: Graph, sources: Sequence[int]) -> PivotAssignment:
    """One Dijkstra run from all ``sources`` at once.

    Labels are compared as ``(distance, source id)`` so a node equidistant from
    several sources is assigned the smallest source id.
    """
    sources = sorted(set(int(s) for s in sources))
    if not sources:
        raise GraphError("multi_source_sssp needs at least one source")
    n = g.n
    indptr, indices, lengths = g.indptr.tolist(), g.indices.tolist(), g.lengths.tolist()
    dist = [INF] * n
    piv = [-1] * n
    heap = []
    for s in sources:
        dist[s] = 0
        piv[s] = s
        heap.append((0, s, s))
    heapq.heapify(heap)
    done = [False] * n
    while heap:
        d, s, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            nd = d + lengths[e]
            if nd < dist[v] or (nd == dist[v] and s < piv[v]):
                dist[v] = nd
                piv[v] = s
                heapq.heappush(heap, (nd, s, v))
    return PivotAssignment(np.asarray(piv, dtype=np.int64), np.asarray(dist, dtype=np.int64))


def components(g: Graph) -> np.ndarray:
    """Connected-component label per node (weak components for digraphs)."""
    _, labels = connected_components(g.csr(), directed=g.directed, connection="weak")
    return labels


def require_connected(g: Graph) -> None:
    labels = components(g)
    bad = np.flatnonzero(labels != labels[0]) if g.n else []
    if len(bad):
        raise DisconnectedGraphError(0, int(bad[0]))


def require_strongly_connected(g: Graph) -> None:
    _, labels = connected_components(g.csr(), directed=True, connection="strong")
    bad = np.flatnonzero(labels != labels[0]) if g.n else []
    if len(bad):
        raise DisconnectedGraphError(
            0, int(bad[0]), f"graph is not strongly connected: nodes 0 and {int(bad[0])}"
        )


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    nodes = np.asarray(sorted(nodes), dtype=np.int64)
    new = np.full(g.n, -1, dtype=np.int64)
    new[nodes] = np.arange(len(nodes))
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    keep = (new[src] >= 0) & (new[g.indices] >= 0)
    if not g.directed:
        keep &= src < g.indices
    return Graph.from_arrays(
        len(nodes),
        new[src[keep]],
        new[g.indices[keep]],
        g.lengths[keep],
        directed=g.directed,
        ids=g.ids[nodes],
    )


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Induced subgraph on the largest connected component.

    Returns the subgraph and ``old_of_new``: the original internal id of each new
    node. Ties between equally large components go to the one containing the
    smallest node id. The subgraph keeps the original input ids in ``ids``.
    """
    if g.directed:
        raise GraphError("largest_component expects an undirected graph")
    if g.n == 0:
        return g, np.zeros(0, dtype=np.int64)
    labels = components(g)
    sizes = np.bincount(labels)
    first = np.full(len(sizes), g.n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(g.n))
    candidates = np.flatnonzero(sizes == sizes.max())
    best = int(candidates[np.argmin(first[candidates])])
    nodes = np.flatnonzero(labels == best)
    if len(nodes) == g.n:
        return g, np.arange(g.n, dtype=np.int64)
    return induced_subgraph(g, nodes), nodes
