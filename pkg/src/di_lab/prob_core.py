"""Finite-alphabet distributions, entropies, distances and spherisation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
RENORM_TOL = 1e-9
NEG_INF = float("-inf")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability vector over symbols 0..|Y|-1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise ValueError("Dist needs at least one symbol")
        if not np.all(np.isfinite(p)):
            raise ValueError("Dist entries must be finite")
        if np.any(p < -RENORM_TOL):
            raise ValueError(f"negative probability {p.min()!r}")
        p = np.clip(p, 0.0, None)
        s = math.fsum(p)
        if abs(s - 1.0) > RENORM_TOL:
            raise ValueError(f"probabilities sum to {s!r}, not 1")
        if abs(s - 1.0) > NORM_TOL:
            p = p / s
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, Dist) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"Dist({self.probs.tolist()})"


@dataclass(frozen=True, eq=False)
class SphVec:
    """Unit vector with nonnegative entries, the image of a Dist under sqrt."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64).ravel()
        if np.any(c < 0):
            raise ValueError("SphVec entries must be nonnegative")
        nrm = math.sqrt(math.fsum(c * c))
        if abs(nrm - 1.0) > NORM_TOL * 10:
            raise ValueError(f"SphVec norm {nrm!r} is not 1")
        object.__setattr__(self, "coords", _frozen(c))

    def __len__(self):
        return self.coords.shape[0]


@dataclass(frozen=True, eq=False)
class SeqDist:
    """Product distribution W_{x_1} x ... x W_{x_n}, stored as an (n, |Y|) array."""

    letters: np.ndarray

    def __post_init__(self):
        L = self.letters
        if isinstance(L, (list, tuple)) and L and isinstance(L[0], Dist):
            sizes = {d.size for d in L}
            if len(sizes) != 1:
                raise ValueError("all letters must share one alphabet size")
            arr = np.stack([d.probs for d in L])
        else:
            arr = np.array(L, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError("SeqDist letters must form an (n, |Y|) array")
            arr = np.stack([Dist(row).probs for row in arr]) if arr.shape[0] else arr
        if arr.shape[0] < 1:
            raise ValueError("SeqDist needs block length >= 1")
        object.__setattr__(self, "letters", _frozen(arr))

    @property
    def n(self) -> int:
        return self.letters.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.letters.shape[1]

    def letter(self, i: int) -> Dist:
        return Dist(self.letters[i])

    def __len__(self):
        return self.n


def as_probs(d) -> np.ndarray:
    if isinstance(d, Dist):
        return d.probs
    return Dist(d).probs


def _pair(p, q):
    a, b = as_probs(p), as_probs(q)
    if a.shape != b.shape:
        raise ValueError(f"alphabet size mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def _log(x, base):
    if base == 2:
        return np.log2(x)
    if base == "e" or base == math.e:
        return np.log(x)
    return np.log(x) / math.log(base)


def entropy(d, base=2) -> float:
    """Shannon entropy, 0 log 0 = 0.  base=2 gives bits, base='e' nats."""
    p = as_probs(d)
    nz = p[p > 0]
    h = -math.fsum(nz * _log(nz, base))
    return max(h, 0.0)


def entropies(rows: np.ndarray, base=2) -> np.ndarray:
    """Row-wise entropy of a stochastic matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(rows > 0, rows * _log(np.where(rows > 0, rows, 1.0), base), 0.0)
    return np.array([max(-math.fsum(r), 0.0) for r in t])


def tv_distance(p, q) -> float:
    a, b = _pair(p, q)
    return 0.5 * math.fsum(np.abs(a - b))


def fidelity(p, q) -> float:
    a, b = _pair(p, q)
    return min(math.fsum(np.sqrt(a * b)), 1.0)


def purified_distance(p, q) -> float:
    """sqrt(1 - F^2), with 1 - F taken as |sqrt p - sqrt q|^2 / 2 to avoid cancellation."""
    a, b = _pair(p, q)
    h = min(0.5 * math.fsum((np.sqrt(a) - np.sqrt(b)) ** 2), 1.0)
    return math.sqrt(max(0.0, h * (2.0 - h)))


def spherise(d) -> SphVec:
    return SphVec(np.sqrt(as_probs(d)))


def _check_seq(a: SeqDist, b: SeqDist):
    if a.n != b.n:
        raise ValueError(f"block length mismatch: {a.n} vs {b.n}")
    if a.alphabet_size != b.alphabet_size:
        raise ValueError("alphabet size mismatch")


def letter_tv(a: SeqDist, b: SeqDist) -> np.ndarray:
    _check_seq(a, b)
    return np.array([tv_distance(x, y) for x, y in zip(a.letters, b.letters)])


def letter_fidelity(a: SeqDist, b: SeqDist) -> np.ndarray:
    _check_seq(a, b)
    return np.array([fidelity(x, y) for x, y in zip(a.letters, b.letters)])


def mixed_12_distance(a: SeqDist, b: SeqDist) -> float:
    """2-norm of the per-letter total variation distances."""
    tv = letter_tv(a, b)
    return math.sqrt(math.fsum(tv * tv))


def dp_distance(a: SeqDist, b: SeqDist) -> float:
    """2-norm of the per-letter purified distances."""
    f = letter_fidelity(a, b)
    return math.sqrt(math.fsum(np.maximum(0.0, 1.0 - f * f)))


def spherised_seq_distance(a: SeqDist, b: SeqDist) -> float:
    _check_seq(a, b)
    diff = np.sqrt(a.letters) - np.sqrt(b.letters)
    return math.sqrt(math.fsum((diff * diff).ravel()))


def seq_log_prob(s: SeqDist, y: Sequence[int], base=2) -> float:
    """log W(y) = sum_i log s_i(y_i); -inf when some factor is zero."""
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (s.n,):
        raise ValueError(f"output word must have length {s.n}")
    if np.any(y < 0) or np.any(y >= s.alphabet_size):
        raise ValueError("output symbol out of alphabet range")
    vals = s.letters[np.arange(s.n), y]
    if np.any(vals == 0.0):
        return NEG_INF
    acc = 0.0
    for v in _log(vals, base):
        acc += v
    return float(acc)


def seq_fidelity(a: SeqDist, b: SeqDist) -> float:
    """Fidelity of the product distributions (multiplicative over letters)."""
    return float(np.prod(letter_fidelity(a, b)))


def joint_pmf(s: SeqDist) -> np.ndarray:
    """Full pmf over |Y|^n output words, row-major in (y_1, ..., y_n).  Tiny n only."""
    out = np.ones(1)
    for row in s.letters:
        out = np.outer(out, row).ravel()
    return out


def kappa(alphabet_size: int) -> float:
    """K(|Y|) = (log2 max(|Y|, 3))^2, the constant of the concentration bound."""
    return math.log2(max(alphabet_size, 3)) ** 2
