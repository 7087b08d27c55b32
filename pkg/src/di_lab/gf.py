"""Outer codes: greedy lexicodes and Gilbert-Varshamov style linear codes over F_p."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .rng import derive_key, integers

LEXICODE_LIMIT = 1 << 16
VARSHAMOV_LIMIT = 1 << 20
ENUM_AUDIT_LIMIT = 1 << 16
AUDIT_SAMPLES = 100_000
MAX_REDRAWS = 100


class RedrawExhausted(RuntimeError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    for q in range(2, int(math.isqrt(p)) + 1):
        if p % q == 0:
            return False
    return True


def largest_prime_le(k: int) -> int:
    for p in range(k, 1, -1):
        if is_prime(p):
            return p
    raise ValueError(f"no prime <= {k}")


def hamming_volume(q: int, n: int, r: int) -> int:
    """Number of words within Hamming distance r of a fixed word in [q]^n."""
    return sum(math.comb(n, i) * (q - 1) ** i for i in range(0, max(r, -1) + 1))


def min_distance_target(n: int, t: float) -> int:
    return max(1, math.ceil(t * n - 1e-12))


# ---------------------------------------------------------------- F_p algebra

def rref_mod(A: np.ndarray, p: int):
    """Reduced row echelon form over F_p; returns (R, pivot columns)."""
    R = np.array(A, dtype=np.int64) % p
    rows, cols = R.shape
    piv = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if len(nz) == 0:
            continue
        s = r + nz[0]
        R[[r, s]] = R[[s, r]]
        inv = pow(int(R[r, c]), p - 2, p)
        R[r] = (R[r] * inv) % p
        for i in range(rows):
            if i != r and R[i, c]:
                R[i] = (R[i] - R[i, c] * R[r]) % p
        piv.append(c)
        r += 1
    return R[:r], piv


def nullspace_mod(H: np.ndarray, p: int) -> np.ndarray:
    """Basis (rows) of {x : H x = 0} over F_p."""
    n = H.shape[1]
    R, piv = rref_mod(H, p)
    free = [c for c in range(n) if c not in piv]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, c in enumerate(piv):
            basis[k, c] = (-R[i, f]) % p
    return basis


# ---------------------------------------------------------------- codes

@dataclass
class LinearCode:
    p: int
    G: np.ndarray          # (r, n) generator over F_p
    d_target: int
    certification: str     # construction | enumeration | sampled(...)
    attempts: int = 1

    @property
    def n(self):
        return self.G.shape[1]

    @property
    def dim(self):
        return self.G.shape[0]

    @property
    def size(self) -> int:
        return self.p ** self.dim

    def encode(self, msgs: np.ndarray) -> np.ndarray:
        msgs = np.asarray(msgs, dtype=np.float64)
        # float matmul is exact here: entries stay far below 2**53
        out = msgs @ self.G.astype(np.float64)
        return np.mod(out, self.p).astype(np.int64)

    def messages_from_index(self, idx) -> np.ndarray:
        """Base-p digits (most significant first) of message indices (Python ints)."""
        out = np.zeros((len(idx), self.dim), dtype=np.int64)
        for row, v in enumerate(idx):
            v = int(v)
            for j in range(self.dim - 1, -1, -1):
                v, out[row, j] = divmod(v, self.p)
        return out

    def all_words(self) -> np.ndarray:
        if self.size > 1 << 22:
            raise ValueError("code too large to enumerate")
        msgs = np.array(list(itertools.product(range(self.p), repeat=self.dim)), dtype=np.int64)
        if self.dim == 0:
            msgs = np.zeros((1, 0), dtype=np.int64)
        return self.encode(msgs)

    def to_json(self):
        return {"p": self.p, "generator": self.G.tolist(), "d_target": self.d_target,
                "certification": self.certification, "attempts": self.attempts}

    @classmethod
    def from_json(cls, d):
        G = np.array(d["generator"], dtype=np.int64).reshape(-1, len(d["generator"][0]) if d["generator"] else 0)
        return cls(int(d["p"]), G, int(d["d_target"]), d["certification"], int(d.get("attempts", 1)))


def identity_code(p: int, n: int) -> LinearCode:
    return LinearCode(p, np.eye(n, dtype=np.int64), 1, "construction")


def min_weight_enumerated(code: LinearCode, chunk=1 << 16) -> int:
    """Exact minimum nonzero weight by enumerating all codewords."""
    if code.dim == 0:
        return code.n + 1
    best = code.n + 1
    total = code.size
    for start in range(1, total, chunk):
        idx = range(start, min(total, start + chunk))
        w = code.encode(code.messages_from_index(idx))
        best = min(best, int((w != 0).sum(axis=1).min()))
    return best


def _syndrome_tables(p, m):
    size = p ** m
    digits = np.array(np.unravel_index(np.arange(size), (p,) * m)).T.astype(np.int64)
    pw = p ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return digits, pw


def varshamov_code(p: int, n: int, d: int, key: int):
    """Parity-check construction: each new column avoids all combinations of
    <= d-2 earlier columns, so every d-1 columns are independent and the code
    has minimum distance >= d.  Returns None if p^m would exceed the table limit."""
    if d <= 1:
        return identity_code(p, n)
    if d == 2:
        H = np.ones((1, n), dtype=np.int64)
        return LinearCode(p, nullspace_mod(H, p), d, "construction")
    m = 1
    vol = hamming_volume(p, n - 1, d - 2)
    while p ** m <= vol:
        m += 1
    if p ** m > VARSHAMOV_LIMIT or m >= n:
        return None
    digits, pw = _syndrome_tables(p, m)
    size = p ** m
    levels = d - 2
    reach = [np.zeros(size, dtype=bool) for _ in range(levels + 1)]
    for lv in reach:
        lv[0] = True
    cols = []
    for c in range(n):
        cand = np.flatnonzero(~reach[levels])
        if len(cand) == 0:
            return None
        s = int(cand[integers(key, [c], len(cand))[0]])
        h = digits[s]
        cols.append(h)
        for w in range(levels, 0, -1):
            src = np.flatnonzero(reach[w - 1])
            for a in range(1, p):
                tgt = ((digits[src] + a * h) % p) @ pw
                reach[w][tgt] = True
    H = np.array(cols, dtype=np.int64).T
    return LinearCode(p, nullspace_mod(H, p), d, "construction")


def random_linear_code(p: int, n: int, d: int, seed: int):
    """Random systematic [I | A] code at the Gilbert dimension, audited and redrawn."""
    red = math.ceil(math.log(2 * hamming_volume(p, n, d - 1), p) - 1e-12)
    r = n - red
    if r < 1:
        raise ValueError(f"no linear code over F_{p} of length {n} reaches distance {d} by the GV bound")
    for attempt in range(1, MAX_REDRAWS + 1):
        key = derive_key(seed, p, n, d, attempt)
        A = integers(key, np.arange(r * (n - r), dtype=np.uint64), p).reshape(r, n - r)
        G = np.hstack([np.eye(r, dtype=np.int64), A])
        code = LinearCode(p, G, d, "", attempt)
        if code.size <= ENUM_AUDIT_LIMIT:
            ok = min_weight_enumerated(code) >= d
            code.certification = "enumeration"
        else:
            skey = derive_key(key, 1)
            msgs = integers(skey, np.arange(AUDIT_SAMPLES * r, dtype=np.uint64), p).reshape(-1, r)
            msgs = msgs[np.any(msgs != 0, axis=1)]
            w = (code.encode(msgs) != 0).sum(axis=1)
            ok = bool(w.min() >= d) if len(w) else True
            code.certification = f"sampled({len(msgs)})"
        if ok:
            return code
    raise RedrawExhausted(f"no code passed the distance audit in {MAX_REDRAWS} draws")


def gv_linear_code(p: int, n: int, d: int, seed: int = 0) -> LinearCode:
    if not is_prime(p):
        raise ValueError(f"field size {p} is not prime")
    code = varshamov_code(p, n, d, derive_key(seed, p, n, d, 0))
    if code is not None:
        return code
    return random_linear_code(p, n, d, seed)


def _ball_patterns(k: int, n: int, d: int):
    L = max(d - 1, 1)
    pos, sh = [], []
    for w in range(1, d):
        for P in itertools.combinations(range(n), w):
            for S in itertools.product(range(1, k), repeat=w):
                pos.append(list(P) + [0] * (L - w))
                sh.append(list(S) + [0] * (L - w))
    if not pos:
        pos, sh = [[0] * L], [[0] * L]
    return np.array(pos, dtype=np.int64), np.array(sh, dtype=np.int64)


def lexicode(k: int, n: int, d: int) -> np.ndarray:
    """Greedy code: scan [k]^n lexicographically, keep words at distance >= d."""
    if k ** n > LEXICODE_LIMIT:
        raise ValueError(f"greedy search over {k}^{n} words exceeds {LEXICODE_LIMIT}")
    pos, sh = _ball_patterns(k, n, d)
    idx = backend.kernels.lexicode(k, n, pos, sh)
    pw = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // pw[None, :]) % k
