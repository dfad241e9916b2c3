"""Accumulator engines for the hybrid sampling/pivoting estimate.

Every engine makes one pass per sampled node over its distance row and keeps
a constant number of running sums per node; ``finalize`` turns the sums into
estimates. The streaming engine consumes settlement events one node at a time
and defers a classification until the pivot has been settled; the array
engine processes a whole distance row at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .graph import INF, Graph, _distance_rows, settlement_order

_ROW_CHUNK = 64


def sample_rows(g: Graph, nodes: Sequence[int]) -> Iterator[np.ndarray]:
    """Distance rows from each node in ``nodes``, in order."""
    nodes = list(nodes)
    for i in range(0, len(nodes), _ROW_CHUNK):
        yield from _distance_rows(g, nodes[i : i + _ROW_CHUNK])


def fallback_size(k: int) -> int:
    """Number of farthest sampled nodes averaged when no far sampled node exists."""
    return max(1, math.ceil(k / 4))


def farness_key(d, node, n: int):
    """Order key for "farthest sampled node": larger distance first, then smaller id."""
    return d * n + (n - 1 - node)


@dataclass
class Context:
    """Per-run constants shared by the engines."""

    n: int
    C: np.ndarray  # sampled nodes, pass order
    in_C: np.ndarray
    cidx: np.ndarray  # sample index of a node, -1 if unsampled
    pivot: np.ndarray  # pivot node per node (itself for sampled nodes)
    delta: np.ndarray  # distance to pivot

    @property
    def k(self) -> int:
        return len(self.C)

    @classmethod
    def build(cls, n, C, pivot, delta):
        C = np.asarray(C, dtype=np.int64)
        in_C = np.zeros(n, dtype=bool)
        in_C[C] = True
        cidx = np.full(n, -1, dtype=np.int64)
        cidx[C] = np.arange(len(C))
        return cls(n, C, in_C, cidx, np.asarray(pivot, dtype=np.int64), np.asarray(delta, dtype=np.int64))


class Sums:
    """Running per-node sums for one threshold rule.

    ``weight`` (node weights) and ``adjusted`` (inverse-probability weights of
    sampled nodes) switch on the weighted variant; unweighted sums stay integer.
    """

    def __init__(self, ctx: Context, eps: float, weight=None, adjusted=None, tau=None):
        n = ctx.n
        self.ctx = ctx
        self.eps = float(eps)
        self.thresh = ctx.delta / self.eps
        self.weighted = weight is not None
        num = np.float64 if self.weighted else np.int64
        self.weight = weight
        self.adjusted = adjusted
        self.tau = tau
        self.exact = np.zeros(n, dtype=num)
        self.Hsum = np.zeros(n, dtype=num)
        self.Hnum = np.zeros(n, dtype=num)
        self.HCsum = np.zeros(n, dtype=num)
        self.HCsqerr = np.zeros(n, dtype=num)
        self.LCsum = np.zeros(n, dtype=num)
        self.LCnum = np.zeros(n, dtype=np.int64)
        self.LCsumSq = np.zeros(n, dtype=num)
        if self.weighted:
            self.HCmass = np.zeros(n, dtype=np.float64)
            self.varest = np.zeros(n, dtype=np.float64)
        self.q = fallback_size(ctx.k)
        self.farkey = np.full((n, self.q), -1, dtype=np.int64)
        self.farsq = np.zeros((n, self.q), dtype=num)
        self.farw = np.zeros((n, self.q), dtype=np.float64)


# ---------------------------------------------------------------- array engine


def array_pass(sums_list: Sequence[Sums], i: int, d: np.ndarray) -> None:
    """Fold the distance row ``d`` of the ``i``-th sampled node into every ``Sums``."""
    ctx = sums_list[0].ctx
    n = ctx.n
    c = int(ctx.C[i])
    nonC = ~ctx.in_C
    rows = np.flatnonzero(nonC)
    dv = d[rows]
    dp = d[ctx.pivot[rows]]
    diff = dv - dp
    sq_lin = diff * diff
    dsq = dv * dv
    cand = farness_key(dv, c, n)

    # tail sums over unsampled nodes for the nodes whose pivot is c
    mine = rows[ctx.pivot[rows] == c]
    order = np.argsort(dv, kind="stable")
    sorted_d = dv[order]

    for s in sums_list:
        if s.weighted:
            bc = s.weight[c]
            s.exact[c] = d.astype(np.float64) @ s.weight
        else:
            bc = 1
            s.exact[c] = d.sum()
        T = s.thresh[rows]
        inL = dp <= T
        Lr, Hr = rows[inL], rows[~inL]
        if s.weighted:
            s.LCsum[Lr] += s.adjusted[c] * dv[inL]
            if bc < s.tau:
                s.varest[Lr] += dsq[inL] * ((s.tau - bc) * s.tau)
            s.HCsum[Hr] += bc * dv[~inL]
            s.HCsqerr[Hr] += bc * sq_lin[~inL]
            s.HCmass[Hr] += bc
            s.LCsumSq[Lr] += dsq[inL]
        else:
            s.LCsum[Lr] += dv[inL]
            s.LCsumSq[Lr] += dsq[inL]
            s.HCsum[Hr] += dv[~inL]
            s.HCsqerr[Hr] += sq_lin[~inL]
        s.LCnum[Lr] += 1

        # keep the q farthest sampled nodes (for the empty-HC fallback)
        slot = np.argmin(s.farkey[rows], axis=1)
        cur = s.farkey[rows, slot]
        upd = cand > cur
        r, sl = rows[upd], slot[upd]
        s.farkey[r, sl] = cand[upd]
        s.farsq[r, sl] = sq_lin[upd]
        s.farw[r, sl] = bc

        if len(mine):
            if s.weighted:
                w = s.weight[rows][order]
                wd = w * sorted_d
                tail_sum = np.concatenate([np.cumsum(wd[::-1])[::-1], [0.0]])
                tail_num = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
            else:
                tail_sum = np.concatenate([np.cumsum(sorted_d[::-1])[::-1], [0]])
                tail_num = np.arange(len(sorted_d), -1, -1)
            pos = np.searchsorted(sorted_d, s.thresh[mine], side="right")
            s.Hsum[mine] = tail_sum[pos]
            s.Hnum[mine] = tail_num[pos]


def run_array(ctx: Context, rows: Iterable[np.ndarray], sums_list: Sequence[Sums]) -> None:
    for i, d in enumerate(rows):
        if np.any(d == INF):
            raise ValueError("distance row contains unreachable nodes")
        array_pass(sums_list, i, d)


# ---------------------------------------------------------------- streaming engine


def run_streaming(g: Graph, ctx: Context, s: Sums) -> None:
    """Event-driven accumulation: one settlement event at a time.

    A sampled node ``c_i`` can be classified for node ``u`` only once the
    distance from ``c_i`` to ``u``'s pivot is known. If the pivot has not been
    settled yet, ``(u, d)`` waits in the list of that pivot and is resolved
    when the pivot is settled. Far-set (H) sums come from per-threshold bins
    that are tail-summed at the end of the pass.
    """
    if s.weighted:
        raise ValueError("the streaming engine handles unweighted sums only")
    n, k = ctx.n, ctx.k
    in_C = ctx.in_C.tolist()
    cidx = ctx.cidx.tolist()
    pidx = ctx.cidx[ctx.pivot].tolist()
    thresh = s.thresh.tolist()
    q = s.q
    # plain Python accumulators; copied back to the arrays at the end
    LCsum = [0] * n
    LCnum = [0] * n
    LCsumSq = [0] * n
    HCsum = [0] * n
    HCsqerr = [0] * n
    Hsum = [0] * n
    Hnum = [0] * n
    far: list[list] = [[] for _ in range(n)]
    last = [-1] * k
    cdist = [0] * k

    def classify(u, du, dpiv, c):
        if dpiv <= thresh[u]:
            LCsum[u] += du
            LCnum[u] += 1
            LCsumSq[u] += du * du
        else:
            HCsum[u] += du
            HCsqerr[u] += (du - dpiv) ** 2
        key = farness_key(du, c, n)
        buf = far[u]
        if len(buf) < q:
            buf.append((key, (du - dpiv) ** 2))
        else:
            j = min(range(q), key=buf.__getitem__)
            if key > buf[j][0]:
                buf[j] = (key, (du - dpiv) ** 2)

    for i, c in enumerate(ctx.C.tolist()):
        dist = _distance_rows(g, [c])[0]
        if np.any(dist == INF):
            raise ValueError("distance row contains unreachable nodes")
        order = settlement_order(dist).tolist()
        dl = dist.tolist()
        pending: dict[int, list] = {}
        total = 0
        # thresholds of nodes pivoted at c; index 0 is a sentinel below every distance
        thr = [-1.0]
        bins = [0]
        cnts = [0]
        tnodes: list[list[int]] = [[]]
        curt = 0
        for u in order:
            d = dl[u]
            total += d
            if in_C[u]:
                j = cidx[u]
                last[j] = i
                cdist[j] = d
                for v, dv in pending.pop(j, ()):
                    classify(v, dv, d, c)
                continue
            pj = pidx[u]
            if last[pj] == i:
                classify(u, d, cdist[pj], c)
            else:
                pending.setdefault(pj, []).append((u, d))
            if pj == i:
                tu = thresh[u]
                if thr[-1] == tu:
                    tnodes[-1].append(u)
                else:
                    thr.append(tu)
                    bins.append(0)
                    cnts.append(0)
                    tnodes.append([u])
            t = len(thr) - 1
            while curt < t and d > thr[curt + 1]:
                curt += 1
            if d > thr[curt]:
                bins[curt] += d
                cnts[curt] += 1
        # the pivot of every node is settled in a connected graph
        assert not pending, "deferred classifications left after a complete pass"
        s.exact[c] = total
        tailsum = tailnum = 0
        for t in range(len(thr) - 1, 0, -1):
            tailsum += bins[t]
            tailnum += cnts[t]
            for u in tnodes[t]:
                Hsum[u] = tailsum
                Hnum[u] = tailnum

    s.LCsum[:] = LCsum
    s.LCnum[:] = LCnum
    s.LCsumSq[:] = LCsumSq
    s.HCsum[:] = HCsum
    s.HCsqerr[:] = HCsqerr
    s.Hsum[:] = Hsum
    s.Hnum[:] = Hnum
    for u in range(n):
        if in_C[u]:
            continue
        buf = far[u]
        for j, (key, sq) in enumerate(buf):
            s.farkey[u, j] = key
            s.farsq[u, j] = sq
            s.farw[u, j] = 1.0


# ---------------------------------------------------------------- finalize


def _fallback_mean(s: Sums, rows: np.ndarray) -> np.ndarray:
    """Mean squared pivot error over the q farthest sampled nodes (order-independent)."""
    keys = s.farkey[rows]
    order = np.argsort(-keys, axis=1, kind="stable")
    sq = np.take_along_axis(s.farsq[rows], order, axis=1).astype(np.float64)
    if s.weighted:
        w = np.take_along_axis(s.farw[rows], order, axis=1)
        wsum = w.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(wsum > 0, (w * sq).sum(axis=1) / wsum, sq.mean(axis=1))
    return sq.sum(axis=1) / s.q


def finalize(s: Sums) -> tuple[np.ndarray, np.ndarray]:
    """Estimated sums and squared-error estimates for all nodes."""
    ctx = s.ctx
    n, k = ctx.n, ctx.k
    S_hat = np.zeros(n, dtype=np.float64)
    err = np.zeros(n, dtype=np.float64)
    C = ctx.C
    S_hat[C] = s.exact[C]
    rows = np.flatnonzero(~ctx.in_C)
    if not len(rows):
        return S_hat, err
    LCnum = s.LCnum[rows]
    LCsum = s.LCsum[rows]
    LCsumSq = s.LCsumSq[rows]
    Hnum = s.Hnum[rows]
    fb = _fallback_mean(s, rows)
    if s.weighted:
        HCmass = s.HCmass[rows]
        S_hat[rows] = s.Hsum[rows] + s.HCsum[rows] + LCsum
        with np.errstate(invalid="ignore", divide="ignore"):
            herr = np.where(HCmass > 0, s.HCsqerr[rows] / HCmass, fb)
        err[rows] = s.varest[rows] + np.where(Hnum > 0, herr * Hnum, 0.0)
        return S_hat, err
    HCnum = k - LCnum
    Lnum = (n - 1) - Hnum - HCnum
    S_hat[rows] = (s.Hsum[rows] + s.HCsum[rows]) + (LCsum * Lnum) / LCnum
    mean = LCsum / LCnum
    var = np.maximum(LCsumSq / LCnum - mean * mean, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        herr = np.where(HCnum > 0, s.HCsqerr[rows] / HCnum, fb)
    err[rows] = (var / LCnum) * Lnum + np.where(Hnum > 0, herr * Hnum, 0.0)
    return S_hat, err


# ---------------------------------------------------------------- full threshold sweep


def full_sweep(ctx: Context, rows: Iterable[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per node, evaluate the threshold estimate at every distinct distance from its
    pivot to a sampled node and keep the one with the smallest estimated error.

    Holds the full sample-by-node distance matrix (memory ``O(n k)``).
    """
    n, k = ctx.n, ctx.k
    D = np.vstack(list(rows)) if k else np.zeros((0, n), dtype=np.int64)
    if np.any(D == INF):
        raise ValueError("distance row contains unreachable nodes")
    C = ctx.C
    S_hat = np.zeros(n, dtype=np.float64)
    best_err = np.zeros(n, dtype=np.float64)
    S_hat[C] = D.sum(axis=1)
    nonC = np.flatnonzero(~ctx.in_C)
    q = fallback_size(k)
    if not len(nonC):
        return S_hat, best_err

    # fallback: mean squared pivot error over the q farthest sampled nodes
    Dv = D[:, nonC].T  # (|nonC|, k)
    pidx = ctx.cidx[ctx.pivot[nonC]]
    delta_cc = D[:, C]  # delta_cc[i, j] = d(c_i, c_j)
    piv_to_c = delta_cc[pidx]  # (|nonC|, k): distance from pivot to each sampled node
    sqerr = (Dv - piv_to_c) ** 2
    keys = farness_key(Dv, C[None, :], n)
    top = np.argsort(-keys, axis=1, kind="stable")[:, :q]
    fb = np.take_along_axis(sqerr, top, axis=1).astype(np.float64).sum(axis=1) / q

    for j in range(k):
        members = np.flatnonzero(pidx == j)
        if not len(members):
            continue
        vs = nonC[members]
        row = D[j]
        ud = np.sort(row[nonC])
        tail_sum = np.concatenate([np.cumsum(ud[::-1])[::-1], [0]])
        dj = delta_cc[j]
        order = np.argsort(dj, kind="stable")
        ds = dj[order]
        # last position of each distinct threshold value
        ends = np.flatnonzero(np.append(ds[1:] != ds[:-1], True))
        T = ds[ends]
        LCnum = ends + 1
        HCnum = k - LCnum
        pos = np.searchsorted(ud, T, side="right")
        Hnum = (len(ud) - pos)[None, :]
        Hsum = tail_sum[pos][None, :]
        own = ctx.delta[vs][:, None]
        # the node itself is not part of its own far set
        self_far = own > T[None, :]
        Hnum = Hnum - self_far
        Hsum = Hsum - np.where(self_far, own, 0)

        Dm = Dv[members][:, order]
        Sq = sqerr[members][:, order]
        cs = np.cumsum(Dm, axis=1)[:, ends]
        cs2 = np.cumsum(Dm * Dm, axis=1)[:, ends]
        csq = np.cumsum(Sq, axis=1)[:, ends]
        LCsum = cs
        HCsum = Dm.sum(axis=1)[:, None] - cs
        HCsq = Sq.sum(axis=1)[:, None] - csq
        Lnum = (n - 1) - Hnum - HCnum[None, :]
        est = (Hsum + HCsum) + (LCsum * Lnum) / LCnum[None, :]
        mean = LCsum / LCnum[None, :]
        var = np.maximum(cs2 / LCnum[None, :] - mean * mean, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            herr = np.where(HCnum[None, :] > 0, HCsq / HCnum[None, :], fb[members][:, None])
        err = (var / LCnum[None, :]) * Lnum + np.where(Hnum > 0, herr * Hnum, 0.0)
        pick = np.argmin(err, axis=1)
        r = np.arange(len(members))
        S_hat[vs] = est[r, pick]
        best_err[vs] = err[r, pick]
    return S_hat, best_err
