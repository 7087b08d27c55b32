"""Counter-based random numbers.

Every draw is a pure function of (key, counter) so Monte-Carlo results do not
depend on execution order or on which kernel backend is active.  The mixer is
SplitMix64; uniforms take the top 53 bits.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_key(*parts) -> int:
    """Fold integers of any size into a 64-bit stream key."""
    h = 0x6A09E667F3BCC908
    for p in parts:
        p = int(p)
        if p < 0:
            # keep negatives distinct from their two's complement neighbours
            h = splitmix64(h ^ 0xD1B54A32D192ED03)
            p = -p
        # absorb 64-bit limbs, always at least one
        while True:
            h = splitmix64(h ^ (p & MASK64))
            p >>= 64
            if p == 0:
                break
        h = splitmix64(h ^ 0xA5A5A5A5A5A5A5A5)
    return h


def mix_array(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64(key + counter * GOLDEN)."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + c * np.uint64(GOLDEN)
        z = z + np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return z


def uniforms(key: int, counters) -> np.ndarray:
    """Doubles in [0, 1) with 53 random bits each."""
    z = mix_array(key, counters)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def uniform(key: int, counter: int = 0) -> float:
    z = splitmix64((key + counter * GOLDEN) & MASK64)
    return (z >> 11) * (1.0 / 9007199254740992.0)


def inverse_cdf(cdf: np.ndarray, u: float) -> int:
    """Smallest y with u < cdf[y]; the last symbol absorbs rounding slack."""
    last = len(cdf) - 1
    y = 0
    while y < last and u >= cdf[y]:
        y += 1
    return y


def permutation(key: int, m: int) -> np.ndarray:
    """Seeded permutation of range(m), sorting by per-index hashes."""
    h = mix_array(key, np.arange(m, dtype=np.uint64))
    return np.argsort(h, kind="stable")


def integers(key: int, counters, high: int) -> np.ndarray:
    """Values in [0, high) by multiply-shift on the top 32 bits (tiny bias is fine)."""
    z = mix_array(key, counters) >> np.uint64(32)
    return ((z * np.uint64(high)) >> np.uint64(32)).astype(np.int64)
