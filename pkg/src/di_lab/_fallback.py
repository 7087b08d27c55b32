"""Pure numpy versions of the compiled kernels.

Arithmetic is ordered exactly like the compiled loops (sequential sums over
positions and coordinates) so both backends agree bit for bit.
"""
import math

import numpy as np

from .rng import uniforms

_CHUNK = 8192


def mc_accept_count(cdf, logp, w_tx, w_dec, lo, hi, key, trials):
    cdf = np.asarray(cdf, dtype=np.float64)
    logp = np.asarray(logp, dtype=np.float64)
    w_tx = np.asarray(w_tx, dtype=np.int64)
    w_dec = np.asarray(w_dec, dtype=np.int64)
    n = len(w_tx)
    ny = cdf.shape[1]
    hits = 0
    for start in range(0, trials, _CHUNK):
        m = min(_CHUNK, trials - start)
        tr = np.arange(start, start + m, dtype=np.uint64)
        acc = np.zeros(m)
        for i in range(n):
            u = uniforms(key, tr * np.uint64(n) + np.uint64(i))
            row = cdf[w_tx[i], : ny - 1]
            y = (u[:, None] >= row[None, :]).sum(axis=1)
            # the compiled loop stops at the first cdf entry above u; cdf is
            # nondecreasing so counting entries <= u gives the same index
            acc = acc + logp[w_dec[i], y]
        hits += int(np.count_nonzero((acc >= lo) & (acc <= hi)))
    return hits


def greedy_pack(pts, sep2, cell):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    m, d = pts.shape
    kept = []
    if cell > 0 and d <= 3:
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        dims = np.floor((hi - lo) / cell).astype(np.int64) + 1
        if int(np.prod(dims)) <= (1 << 24):
            return _greedy_grid(pts, sep2, cell, lo, dims)
    kept_pts = np.empty((0, d))
    for i in range(m):
        if kept:
            d2 = np.zeros(len(kept))
            for k in range(d):
                diff = pts[i, k] - kept_pts[:, k]
                d2 = d2 + diff * diff
            if np.any(d2 < sep2):
                continue
        kept.append(i)
        kept_pts = pts[kept]
    return np.array(kept, dtype=np.int64)


def _greedy_grid(pts, sep2, cell, lo, dims):
    m, d = pts.shape
    cells = np.floor((pts - lo) / cell).astype(np.int64)
    cells = np.minimum(cells, dims - 1)
    buckets = {}
    kept = []
    offsets = np.array(np.meshgrid(*[[-1, 0, 1]] * d, indexing="ij")).reshape(d, -1).T
    for i in range(m):
        c = cells[i]
        cand = []
        for off in offsets:
            lst = buckets.get(tuple(c + off))
            if lst:
                cand.extend(lst)
        if cand:
            q = pts[cand]
            d2 = np.zeros(len(cand))
            for k in range(d):
                diff = pts[i, k] - q[:, k]
                d2 = d2 + diff * diff
            if np.any(d2 < sep2):
                continue
        kept.append(i)
        buckets.setdefault(tuple(c), []).append(i)
    return np.array(kept, dtype=np.int64)


def lexicode(k, n, pos, shift):
    total = k ** n
    forb = np.zeros(total, dtype=bool)
    pw = np.array([k ** (n - 1 - i) for i in range(n)], dtype=np.int64)
    pos = np.asarray(pos, dtype=np.int64)
    shift = np.asarray(shift, dtype=np.int64)
    active = shift != 0
    kept = []
    w = 0
    while w < total:
        if forb[w]:
            # jump to the next free word
            nxt = np.flatnonzero(~forb[w:])
            if len(nxt) == 0:
                break
            w += int(nxt[0])
        kept.append(w)
        dig = (w // pw) % k
        nd = (dig[pos] + shift) % k
        delta = np.where(active, (nd - dig[pos]) * pw[pos], 0).sum(axis=1)
        forb[w] = True
        forb[w + delta] = True
        w += 1
    return np.array(kept, dtype=np.int64)


def min_pair_cost(words, cost):
    words = np.asarray(words, dtype=np.int64)
    m, n = words.shape
    best = math.inf
    for a in range(m - 1):
        rest = words[a + 1:]
        acc = np.zeros(len(rest))
        for i in range(n):
            acc = acc + cost[words[a, i], rest[:, i]]
        v = float(acc.min())
        if v < best:
            best = v
    return best
