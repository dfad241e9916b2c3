"""Small synthetic graphs for tests and the evaluation harness.

Desk-scale stand-ins for the usual benchmark families: grids, meshes,
geometric graphs, preferential attachment and small-world graphs, plus a few
closed-form shapes (paths, stars, star-with-tail) with skewed distances.
"""

from __future__ import annotations

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay

from .graph import Graph, largest_component


def _from_nx(G: nx.Graph, lengths=None, directed: bool = False) -> Graph:
    G = nx.convert_node_labels_to_integers(G, ordering="sorted")
    edges = []
    for u, v in G.edges():
        w = 1 if lengths is None else lengths(u, v)
        edges.append((u, v, w))
    return Graph.from_edges(G.number_of_nodes(), edges, directed=directed)


def _random_lengths(rng, max_length):
    if max_length <= 1:
        return None
    return lambda u, v: int(rng.integers(1, max_length + 1))


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star(n: int) -> Graph:
    """Center 0 joined to leaves ``1..n-1``."""
    return Graph.from_edges(n, [(0, i) for i in range(1, n)])


def clique(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_with_tail(leaves: int, tail: int, tail_length: int = 1) -> Graph:
    """A star (center 0, leaves ``1..leaves``) with a path of ``tail`` nodes hanging off the center.

    Most nodes see a few very distant tail nodes, so the distance distribution
    is heavy-tailed.
    """
    edges = [(0, i, 1) for i in range(1, leaves + 1)]
    prev = 0
    for j in range(tail):
        node = leaves + 1 + j
        edges.append((prev, node, tail_length))
        prev = node
    return Graph.from_edges(leaves + 1 + tail, edges)


def grid(rows: int, cols: int) -> Graph:
    return _from_nx(nx.grid_2d_graph(rows, cols))


def erdos_renyi(n: int, avg_degree: float, seed: int = 0, max_length: int = 1) -> Graph:
    """Largest component of G(n, p) with ``p = avg_degree / (n - 1)``."""
    rng = np.random.default_rng(seed)
    G = nx.gnp_random_graph(n, avg_degree / (n - 1), seed=seed)
    g = _from_nx(G, _random_lengths(rng, max_length))
    return largest_component(g)[0]


def connected_random(n: int, extra_edges: int, seed: int = 0, max_length: int = 1) -> Graph:
    """Random spanning tree plus ``extra_edges`` random edges (always connected)."""
    rng = np.random.default_rng(seed)
    edges = []
    for v in range(1, n):
        edges.append((int(rng.integers(0, v)), v))
    for _ in range(extra_edges):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.append((int(u), int(v)))
    perm = rng.permutation(n)
    out = []
    for u, v in edges:
        w = int(rng.integers(1, max_length + 1)) if max_length > 1 else 1
        out.append((int(perm[u]), int(perm[v]), w))
    return Graph.from_edges(n, out)


def preferential_attachment(n: int, m: int = 3, seed: int = 0) -> Graph:
    return _from_nx(nx.barabasi_albert_graph(n, m, seed=seed))


def small_world(n: int, k: int = 6, p: float = 0.1, seed: int = 0) -> Graph:
    return _from_nx(nx.connected_watts_strogatz_graph(n, k, p, seed=seed))


def random_geometric(n: int, radius: float, seed: int = 0, euclidean: bool = False, scale: int = 1000) -> Graph:
    """Unit-square random geometric graph, largest component.

    With ``euclidean`` the edge lengths are rounded Euclidean distances times ``scale``.
    """
    G = nx.random_geometric_graph(n, radius, seed=seed)
    pos = nx.get_node_attributes(G, "pos")
    lengths = None
    if euclidean:
        lengths = lambda u, v: max(1, int(round(scale * np.hypot(*np.subtract(pos[u], pos[v])))))
    return largest_component(_from_nx(G, lengths))[0]


def delaunay_mesh(n: int, seed: int = 0, euclidean: bool = False, scale: int = 1000) -> Graph:
    """Delaunay triangulation of ``n`` uniform random points in the unit square."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    tri = Delaunay(pts)
    edges = set()
    for a, b, c in tri.simplices.tolist():
        for u, v in ((a, b), (b, c), (a, c)):
            edges.add((min(u, v), max(u, v)))
    out = []
    for u, v in sorted(edges):
        w = max(1, int(round(scale * np.hypot(*(pts[u] - pts[v]))))) if euclidean else 1
        out.append((u, v, w))
    return Graph.from_edges(n, out)


def random_dag(n: int, p: float, seed: int = 0, max_length: int = 1) -> Graph:
    """Arcs ``u -> v`` for ``u < v`` in a random topological order, each with probability ``p``."""
    rng = np.random.default_rng(seed)
    iu, iv = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    perm = rng.permutation(n)
    w = rng.integers(1, max_length + 1, size=int(keep.sum())) if max_length > 1 else np.ones(int(keep.sum()), int)
    return Graph.from_arrays(n, perm[iu[keep]], perm[iv[keep]], w, directed=True)


def random_strongly_connected(n: int, extra_arcs: int, seed: int = 0, max_length: int = 1) -> Graph:
    """A directed cycle through a random permutation plus random extra arcs."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    rows = list(perm)
    cols = list(np.roll(perm, -1))
    u = rng.integers(0, n, size=extra_arcs)
    v = rng.integers(0, n, size=extra_arcs)
    rows += list(u)
    cols += list(v)
    m = len(rows)
    w = rng.integers(1, max_length + 1, size=m) if max_length > 1 else np.ones(m, int)
    return Graph.from_arrays(n, rows, cols, w, directed=True)


def symmetric_digraph(g: Graph) -> Graph:
    """The directed graph with both arcs of every undirected edge of ``g``."""
    src = np.repeat(np.arange(g.n), np.diff(g.indptr))
    return Graph.from_arrays(g.n, src, g.indices, g.lengths, directed=True, ids=g.ids)


FAMILIES = {
    "grid": lambda seed: grid(32, 32),
    "geometric": lambda seed: random_geometric(1200, 0.06, seed=seed),
    "mesh": lambda seed: delaunay_mesh(1024, seed=seed),
    "pref-attach": lambda seed: preferential_attachment(1024, 3, seed=seed),
    "small-world": lambda seed: small_world(1024, 6, 0.1, seed=seed),
    "star-tail": lambda seed: star_with_tail(900, 124),
}
