"""Reference implementations used only by the tests.

Nothing here calls into the package's shortest-path or estimator code: the
all-pairs matrix comes from Floyd-Warshall, single sources from Bellman-Ford,
reachability from DFS, and estimates are evaluated straight from their
definitions on the full distance matrix.
"""

from __future__ import annotations

import math

import numpy as np

INF = math.inf


def edge_arrays(g):
    src = np.repeat(np.arange(g.n), np.diff(g.indptr))
    return src, np.asarray(g.indices), np.asarray(g.lengths)


def floyd_warshall(g) -> np.ndarray:
    """All-pairs distances as floats, ``inf`` where unreachable."""
    n = g.n
    D = np.full((n, n), INF)
    np.fill_diagonal(D, 0.0)
    src, dst, ln = edge_arrays(g)
    for u, v, w in zip(src.tolist(), dst.tolist(), ln.tolist()):
        D[u, v] = min(D[u, v], w)
    for m in range(n):
        D = np.minimum(D, D[:, m : m + 1] + D[m : m + 1, :])
    return D


def int_matrix(D: np.ndarray) -> np.ndarray:
    assert np.all(np.isfinite(D))
    return D.astype(np.int64)


def bellman_ford(g, s: int) -> np.ndarray:
    src, dst, ln = edge_arrays(g)
    d = np.full(g.n, INF)
    d[s] = 0.0
    for _ in range(g.n):
        cand = d[src] + ln
        new = d.copy()
        np.minimum.at(new, dst, cand)
        if np.array_equal(new, d):
            break
        d = new
    return d


def uf_components(n: int, edges) -> list[int]:
    """Sorted component sizes via union-find."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
    sizes = {}
    for x in range(n):
        r = find(x)
        sizes[r] = sizes.get(r, 0) + 1
    return sorted(sizes.values())


def dfs_reach(g) -> list[set]:
    """Nodes reachable from each node (excluding itself)."""
    adj = [[] for _ in range(g.n)]
    src, dst, _ = edge_arrays(g)
    for u, v in zip(src.tolist(), dst.tolist()):
        adj[u].append(v)
    out = []
    for s in range(g.n):
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        seen.discard(s)
        out.append(seen)
    return out


def pivots(D: np.ndarray, C) -> tuple[np.ndarray, np.ndarray]:
    """Closest sampled node per node (ties to the smallest id) and its distance."""
    Cs = np.sort(np.asarray(C))
    sub = D[Cs]  # (k, n), rows ordered by id
    best = np.argmin(sub, axis=0)
    return Cs[best], sub[best, np.arange(D.shape[1])]


def fallback_size(k: int) -> int:
    return max(1, math.ceil(k / 4))


def _fallback(D, C, v, c, w=None):
    """Mean squared pivot error over the ceil(k/4) farthest sampled nodes from v."""
    q = fallback_size(len(C))
    far = sorted(C, key=lambda u: (-D[v, u], u))[:q]
    sq = [(D[v, u] - D[c, u]) ** 2 for u in far]
    if w is None:
        return sum(sq) / q
    ws = [w[u] for u in far]
    if sum(ws) == 0:
        return sum(sq) / q
    return sum(a * b for a, b in zip(ws, sq)) / sum(ws)


def hybrid_at(D, C, v, c, T):
    """Threshold estimate of ``sum_u D[v, u]`` and its error estimate, straight from the sets.

    H: unsampled ``u != v`` with ``D[c, u] > T``; HC: sampled with ``D[c, u] > T``;
    L: everything else except ``v``.
    """
    n = D.shape[0]
    Cset = set(int(x) for x in C)
    H = [u for u in range(n) if u != v and u not in Cset and D[c, u] > T]
    HC = [u for u in Cset if D[c, u] > T]
    LC = [u for u in Cset if D[c, u] <= T]
    L = n - 1 - len(H) - len(HC)
    ld = [int(D[v, u]) for u in LC]
    est = sum(int(D[c, u]) for u in H) + sum(int(D[v, u]) for u in HC) + (sum(ld) * L) / len(LC)
    mean = sum(ld) / len(LC)
    var = max(sum(x * x for x in ld) / len(LC) - mean * mean, 0.0)
    if HC:
        herr = sum((D[v, u] - D[c, u]) ** 2 for u in HC) / len(HC)
    else:
        herr = _fallback(D, sorted(Cset), v, c)
    err = var / len(LC) * L + (herr * len(H) if H else 0.0)
    return est, err, (len(H), len(HC), L, len(LC))


def direct_hybrid(D, C, eps):
    """Hybrid estimate for every node, evaluated from the full matrix ``D``."""
    n = D.shape[0]
    piv, delta = pivots(D, C)
    Cset = set(int(x) for x in C)
    S = np.zeros(n)
    E = np.zeros(n)
    for v in range(n):
        if v in Cset:
            S[v] = D[v].sum()
            continue
        S[v], E[v], _ = hybrid_at(D, C, v, int(piv[v]), delta[v] / eps)
    return S, E


def direct_sweep(D, C):
    """Per node, the (estimate, error) pair of smallest error over thresholds
    ``D[c(v), c_j]`` for every sampled ``c_j``."""
    n = D.shape[0]
    piv, _ = pivots(D, C)
    Cset = set(int(x) for x in C)
    S = np.zeros(n)
    E = np.zeros(n)
    for v in range(n):
        if v in Cset:
            S[v] = D[v].sum()
            continue
        c = int(piv[v])
        evals = [hybrid_at(D, C, v, c, D[c, cj])[:2] for cj in sorted(Cset)]
        best = min(e for _, e in evals)
        S[v] = next(s for s, e in evals if e == best)
        E[v] = best
    return S, E


def direct_weighted(D, beta, C, tau, eps):
    """Weighted hybrid estimate and error estimate from the full matrix."""
    n = D.shape[0]
    piv, delta = pivots(D, C)
    Cset = set(int(x) for x in C)
    S = np.zeros(n)
    E = np.zeros(n)
    for v in range(n):
        if v in Cset:
            S[v] = sum(beta[u] * D[v, u] for u in range(n))
            continue
        c = int(piv[v])
        T = delta[v] / eps
        H = [u for u in range(n) if u != v and u not in Cset and D[c, u] > T]
        HC = [u for u in Cset if D[c, u] > T]
        LC = [u for u in Cset if D[c, u] <= T]
        est = sum(beta[u] * D[c, u] for u in H)
        est += sum(beta[u] * D[v, u] for u in HC)
        est += sum(max(tau, beta[u]) * D[v, u] for u in LC)
        var = sum(D[v, u] ** 2 * (tau - beta[u]) * tau for u in LC if beta[u] < tau)
        hmass = sum(beta[u] for u in H)
        hcmass = sum(beta[u] for u in HC)
        if hcmass > 0:
            herr = sum(beta[u] * (D[v, u] - D[c, u]) ** 2 for u in HC) / hcmass
        else:
            herr = _fallback(D, sorted(Cset), v, c, beta)
        S[v] = est
        E[v] = var + (herr * hmass if hmass > 0 else 0.0)
    return S, E
