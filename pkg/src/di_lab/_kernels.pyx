# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Each function mirrors one in _fallback.py and must
return bit-identical results for identical inputs."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t
from libc.math cimport floor, isfinite

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline double _uniform(uint64_t key, uint64_t ctr) noexcept nogil:
    cdef uint64_t z = key + ctr * GOLDEN + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    z = z ^ (z >> 31)
    return <double>(z >> 11) * TWO_M53


def mc_accept_count(const double[:, ::1] cdf, const double[:, ::1] logp,
                    const int64_t[::1] w_tx, const int64_t[::1] w_dec,
                    double lo, double hi, uint64_t key, int64_t trials):
    """Number of trials whose output, drawn letterwise from cdf rows w_tx,
    has log-probability under rows w_dec inside [lo, hi]."""
    cdef Py_ssize_t n = w_tx.shape[0]
    cdef Py_ssize_t ny = cdf.shape[1]
    cdef Py_ssize_t i, y, a
    cdef int64_t tr, hits = 0
    cdef double u, acc
    with nogil:
        for tr in range(trials):
            acc = 0.0
            for i in range(n):
                u = _uniform(key, <uint64_t>(tr * n + i))
                a = w_tx[i]
                y = 0
                while y < ny - 1 and u >= cdf[a, y]:
                    y += 1
                acc = acc + logp[w_dec[i], y]
            if acc >= lo and acc <= hi:
                hits += 1
    return hits


def greedy_pack(const double[:, ::1] pts, double sep2, double cell):
    """Greedy maximal packing over points already in scan order.

    Keeps a point iff its squared distance to every kept point is >= sep2.
    cell > 0 enables bucketing (d <= 3); neighbours are searched in the
    adjacent cells only, which is exact because cell exceeds the separation.
    Returns positions into pts.
    """
    cdef Py_ssize_t m = pts.shape[0], d = pts.shape[1]
    cdef Py_ssize_t i, j, k, c, nk
    cdef double diff, d2
    cdef bint ok
    out = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] kept = out
    cdef Py_ssize_t nkept = 0
    cdef double[3] lo
    cdef int64_t[3] dims
    cdef int64_t[3] cc
    cdef int64_t ncells = 1
    cdef int64_t q, cidx, o0, o1, o2, a0, a1, a2
    cdef int64_t[::1] head
    cdef int64_t[::1] nxt
    cdef bint use_grid = cell > 0 and d <= 3

    if use_grid:
        arr = np.asarray(pts)
        mins = arr.min(axis=0)
        maxs = arr.max(axis=0)
        for k in range(3):
            if k < d:
                lo[k] = mins[k]
                dims[k] = <int64_t>floor((maxs[k] - mins[k]) / cell) + 1
            else:
                lo[k] = 0.0
                dims[k] = 1
            ncells *= dims[k]
        if ncells > (1 << 24):
            use_grid = False
    if use_grid:
        head_arr = np.full(ncells, -1, dtype=np.int64)
        nxt_arr = np.full(m, -1, dtype=np.int64)
        head = head_arr
        nxt = nxt_arr
        with nogil:
            for i in range(m):
                for k in range(3):
                    if k < d:
                        cc[k] = <int64_t>floor((pts[i, k] - lo[k]) / cell)
                        if cc[k] >= dims[k]:
                            cc[k] = dims[k] - 1
                    else:
                        cc[k] = 0
                ok = True
                for o0 in range(-1, 2):
                    a0 = cc[0] + o0
                    if a0 < 0 or a0 >= dims[0]:
                        continue
                    for o1 in range(-1, 2):
                        a1 = cc[1] + o1
                        if a1 < 0 or a1 >= dims[1]:
                            continue
                        for o2 in range(-1, 2):
                            a2 = cc[2] + o2
                            if a2 < 0 or a2 >= dims[2]:
                                continue
                            q = head[(a0 * dims[1] + a1) * dims[2] + a2]
                            while q >= 0:
                                d2 = 0.0
                                for k in range(d):
                                    diff = pts[i, k] - pts[q, k]
                                    d2 = d2 + diff * diff
                                if d2 < sep2:
                                    ok = False
                                    break
                                q = nxt[q]
                            if not ok:
                                break
                        if not ok:
                            break
                    if not ok:
                        break
                if ok:
                    kept[nkept] = i
                    nkept += 1
                    cidx = (cc[0] * dims[1] + cc[1]) * dims[2] + cc[2]
                    nxt[i] = head[cidx]
                    head[cidx] = i
    else:
        with nogil:
            for i in range(m):
                ok = True
                for j in range(nkept):
                    c = kept[j]
                    d2 = 0.0
                    for k in range(d):
                        diff = pts[i, k] - pts[c, k]
                        d2 = d2 + diff * diff
                    if d2 < sep2:
                        ok = False
                        break
                if ok:
                    kept[nkept] = i
                    nkept += 1
    return out[:nkept].copy()


def lexicode(int64_t k, int64_t n, const int64_t[:, ::1] pos, const int64_t[:, ::1] shift):
    """Greedy lexicographic code over [k]^n.

    pos/shift list every nonzero error pattern of weight < d (rows padded
    with shift 0).  A word is kept iff no kept word lies within the ball;
    kept words forbid their whole ball.  Returns word indices in base k,
    most significant digit first.
    """
    cdef int64_t total = 1
    cdef Py_ssize_t i, v, j
    for i in range(n):
        total *= k
    forb_arr = np.zeros(total, dtype=np.uint8)
    cdef unsigned char[::1] forb = forb_arr
    pw_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] pw = pw_arr
    dig_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] dig = dig_arr
    out = np.empty(total, dtype=np.int64)
    cdef int64_t[::1] kept = out
    cdef int64_t nkept = 0, w, idx, p, nd, rem
    cdef Py_ssize_t nv = pos.shape[0], L = pos.shape[1]
    pw[n - 1] = 1
    for i in range(n - 2, -1, -1):
        pw[i] = pw[i + 1] * k
    with nogil:
        for w in range(total):
            if forb[w]:
                continue
            kept[nkept] = w
            nkept += 1
            rem = w
            for i in range(n - 1, -1, -1):
                dig[i] = rem % k
                rem = rem // k
            forb[w] = 1
            for v in range(nv):
                idx = w
                for j in range(L):
                    if shift[v, j] == 0:
                        continue
                    p = pos[v, j]
                    nd = (dig[p] + shift[v, j]) % k
                    idx += (nd - dig[p]) * pw[p]
                forb[idx] = 1
    return out[:nkept].copy()


def min_pair_cost(const int64_t[:, ::1] words, const double[:, ::1] cost):
    """min over unordered pairs a < b of sum_i cost[w_a[i], w_b[i]]."""
    cdef Py_ssize_t m = words.shape[0], n = words.shape[1]
    cdef Py_ssize_t a, b, i
    cdef double best = float("inf"), acc
    with nogil:
        for a in range(m):
            for b in range(a + 1, m):
                acc = 0.0
                for i in range(n):
                    acc = acc + cost[words[a, i], words[b, i]]
                if acc < best:
                    best = acc
    return best
