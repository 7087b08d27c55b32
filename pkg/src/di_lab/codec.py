"""DI code construction: alphabet net, outer Hamming code, entropy binning, decoders."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gf
from .channels import ArcChannel, Channel, arc_distance, channel_from_json
from .geometry import PointCloud, greedy_packing
from .prob_core import NEG_INF, SeqDist, entropies, kappa, seq_log_prob
from .rng import derive_key, integers

MODES = ("auto", "greedy", "gv_linear")
EXPLICIT_LIMIT = 1 << 16
PAIR_CHECK_LIMIT = 4096
BIN_SAMPLES = 4096


# ---------------------------------------------------------------- bounds

def lemma1_bound(delta: float, alphabet_size: int) -> float:
    """2 exp(-delta^2 / 36 K(|Y|)): first-kind error bound of the typical set."""
    return 2.0 * math.exp(-delta * delta / (36.0 * kappa(alphabet_size)))


def lemma2_bound(H_u, H_v, n, delta, epsilon, alphabet_size) -> float:
    """Second-kind bound for decoder u facing input v, given 1 - TV(W_u, W_v) <= epsilon.

    The exponent is evaluated in log space so huge 2^(2 delta sqrt n) factors
    do not overflow; the result may exceed 1 (then it is vacuous).
    """
    first = lemma1_bound(delta, alphabet_size)
    if epsilon == 0:
        return first
    log2_term = 2 * delta * math.sqrt(n) + (H_u - H_v) + math.log2(epsilon)
    second = epsilon + (2.0 ** log2_term if log2_term < 1000 else math.inf)
    return first + second


def delta_window(n: int, alphabet_size: int) -> float:
    return math.sqrt(n) * math.log2(alphabet_size)


def default_delta(n: int, alphabet_size: int, target: float = 0.05) -> float:
    """Smallest delta for which the first-kind bound reaches `target`, clipped to the window."""
    d = math.sqrt(36.0 * kappa(alphabet_size) * math.log(2.0 / target))
    return min(d, delta_window(n, alphabet_size))


def check_alpha(alpha: float):
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha={alpha} outside the window (0, 1/2)")


def check_delta(delta: float, n: int, alphabet_size: int):
    hi = delta_window(n, alphabet_size)
    if not 0 < delta <= hi * (1 + 1e-12):
        raise ValueError(f"delta={delta} outside the typicality window (0, sqrt(n) log2|Y|] = (0, {hi:.6g}]")


# ---------------------------------------------------------------- net

@dataclass
class AlphabetNet:
    letters: list
    dists: np.ndarray
    radius: float
    min_separation: float
    metric_used: str = "spherised-euclidean"

    def __len__(self):
        return len(self.letters)


def _default_resolution(ch: Channel, n: int, alpha: float):
    kind = ch.input_set.kind
    if kind in ("log_sequence", "poly_sequence", "exp_sequence"):
        # spherisation stretches like sqrt near 0, so go well below sep^2
        return (n ** -alpha / 8) ** 2
    if kind in ("fractal_F", "fractal_G"):
        return 4
    if kind == "interval":
        return (ch.input_set.hi - ch.input_set.lo) / 2000
    if kind == "product":
        return 4
    return None


def build_alphabet_net(ch: Channel, n: int, alpha: float, resolution=None) -> AlphabetNet:
    """Greedy packing of the spherised input cloud at radius n^-alpha / 2."""
    check_alpha(alpha)
    if not ch.has_dist:
        raise ValueError("alphabet nets need a finite-output channel")
    if resolution is None:
        resolution = _default_resolution(ch, n, alpha)
    cand = ch.input_set.enumerate(resolution)
    if not cand:
        raise ValueError("input enumeration is empty")
    rows = ch.output_matrix(cand)
    cloud = PointCloud(np.sqrt(rows), "euclidean_on_sphvec")
    radius = n ** -alpha / 2
    net = greedy_packing(cloud, radius)
    idx = net.center_indices
    letters = [cand[i] for i in idx]
    dists = rows[idx]
    if len(idx) > 1:
        sq = np.sqrt(dists)
        d2 = ((sq[:, None, :] - sq[None, :, :]) ** 2).sum(axis=2)
        sep = float(np.sqrt(d2[np.triu_indices(len(idx), 1)].min()))
    else:
        sep = math.inf
    return AlphabetNet(letters, dists, radius, sep)


# ---------------------------------------------------------------- outer code

def check_t(t: float, k: int):
    if k < 2:
        return
    if not 0 < t < 1 - 1 / k:
        raise ValueError(f"t={t} outside (0, 1 - 1/k) = (0, {1 - 1 / k:.6g}) for alphabet size {k}")


@dataclass
class OuterCode:
    k: int                       # alphabet actually used (p in linear mode)
    n: int
    d_target: int
    mode: str
    words: np.ndarray | None = None
    linear: gf.LinearCode | None = None

    @property
    def size(self) -> int:
        return len(self.words) if self.words is not None else self.linear.size

    def counting_floor(self, k_full: int, t: float) -> int:
        return math.floor(2.0 ** (-self.n) * k_full ** (self.n * (1 - t)))


def build_outer_code(k: int, n: int, t: float, mode: str = "auto", seed: int = 0) -> OuterCode:
    """Code over [k]^n with minimum Hamming distance >= ceil(t n)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    if k == 1:
        return OuterCode(1, n, 1, "trivial", words=np.zeros((1, n), dtype=np.int64))
    check_t(t, k)
    d = gf.min_distance_target(n, t)
    if mode == "auto":
        mode = "greedy" if k ** n <= gf.LEXICODE_LIMIT else "gv_linear"
    if mode == "greedy":
        words = gf.lexicode(k, n, d)
        floor_ = math.floor(2.0 ** (-n) * k ** (n * (1 - t)))
        if len(words) < floor_:
            raise RuntimeError(f"greedy code stopped at {len(words)} < counting floor {floor_}")
        return OuterCode(k, n, d, "greedy", words=words)
    p = gf.largest_prime_le(k)
    if 2 * p < k:
        raise ValueError(f"prime trimming failed for k={k}")
    check_t(t, p)
    code = gf.gv_linear_code(p, n, d, seed)
    return OuterCode(p, n, d, "gv_linear", linear=code)


# ---------------------------------------------------------------- decoder

@dataclass(frozen=True)
class TypicalityDecoder:
    codeword: tuple          # alphabet indices
    delta: float
    n: int
    target_entropy: float    # bits

    @property
    def lo(self) -> float:
        return -self.target_entropy - self.delta * math.sqrt(self.n)

    @property
    def hi(self) -> float:
        return -self.target_entropy + self.delta * math.sqrt(self.n)


def typicality_test(dec: TypicalityDecoder, s: SeqDist, y) -> bool:
    if len(y) != dec.n or s.n != dec.n:
        raise ValueError("output word length does not match the decoder")
    lp = seq_log_prob(s, y)
    if lp == NEG_INF:
        return False
    return dec.lo <= lp <= dec.hi


# ---------------------------------------------------------------- code

@dataclass
class DICode:
    channel: Channel
    n: int
    decoder_kind: str                 # typicality | arc_support
    delta: float | None
    letters: list
    letter_dists: np.ndarray | None
    outer: OuterCode
    bin_index: int | None = None
    words: np.ndarray | None = None   # explicit codewords (alphabet indices)
    size_floor: int | None = None     # certified size when words are implicit
    meta: dict = field(default_factory=dict)

    # sizes --------------------------------------------------------------
    @property
    def explicit(self) -> bool:
        return self.words is not None

    @property
    def size(self) -> int:
        return len(self.words) if self.explicit else int(self.size_floor)

    def __len__(self):
        return self.size

    # letters ------------------------------------------------------------
    @property
    def letter_entropies(self) -> np.ndarray:
        return entropies(self.letter_dists)

    def word_entropy(self, w) -> float:
        return math.fsum(self.letter_entropies[np.asarray(w, dtype=np.int64)])

    def word_letters(self, w) -> list:
        return [self.letters[i] for i in w]

    def seqdist(self, w) -> SeqDist:
        return SeqDist(self.letter_dists[np.asarray(w, dtype=np.int64)])

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.letter_dists, axis=1)
        return np.ascontiguousarray(c)

    def logp(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.ascontiguousarray(np.log2(self.letter_dists))

    # codewords ----------------------------------------------------------
    def codeword(self, j: int) -> np.ndarray:
        if not self.explicit:
            raise ValueError("implicit code: use sample_codewords")
        return self.words[j]

    def sample_codewords(self, key: int, count: int):
        """Distinct codewords chosen by a seeded draw: (ids, words)."""
        if self.explicit:
            from .rng import permutation
            m = len(self.words)
            idx = permutation(key, m)[: min(count, m)]
            idx = np.sort(idx)
            return [int(i) for i in idx], self.words[idx]
        code = self.outer.linear
        h = self.letter_entropies if self.bin_index is not None else None
        ids, out, seen = [], [], set()
        batch = 0
        while len(out) < count:
            bkey = derive_key(key, batch)
            msgs = integers(bkey, np.arange(BIN_SAMPLES * code.dim, dtype=np.uint64), code.p)
            msgs = msgs.reshape(BIN_SAMPLES, code.dim)
            words = code.encode(msgs)
            for m, w in zip(msgs, words):
                if h is not None and _bin_of(math.fsum(h[w]), self.meta["bins_total"]) != self.bin_index:
                    continue
                mid = int("".join(map(str, m.tolist())) or "0", code.p) if code.p <= 10 else \
                    sum(int(v) * code.p ** (code.dim - 1 - i) for i, v in enumerate(m))
                if mid in seen:
                    continue
                seen.add(mid)
                ids.append(mid)
                out.append(w)
                if len(out) == count:
                    break
            batch += 1
            if batch > 1000:
                raise RuntimeError("entropy bin too sparse to sample")
        return ids, np.array(out, dtype=np.int64)

    def decoder(self, w) -> TypicalityDecoder:
        if self.decoder_kind != "typicality":
            raise ValueError("arc codes use the support decoder")
        w = tuple(int(v) for v in w)
        return TypicalityDecoder(w, float(self.delta), self.n, self.word_entropy(w))

    # serialisation ------------------------------------------------------
    def to_json(self) -> dict:
        enc = self.channel.encode_letter
        out = {
            "channel": self.channel.to_json(),
            "n": self.n,
            "size": self.size,
            "decoder": {"kind": self.decoder_kind, "delta": self.delta},
            "alphabet": [enc(x) for x in self.letters],
            "entropy_bin": self.bin_index,
            "construction_meta": self.meta,
        }
        if self.explicit:
            out["codewords"] = [[enc(self.letters[i]) for i in w] for w in self.words.tolist()]
            out["outer"] = {"kind": "explicit", "k": self.outer.k, "d_target": self.outer.d_target,
                            "mode": self.outer.mode}
        else:
            out["codewords"] = None
            out["outer"] = {"kind": "linear", "k": self.outer.k, "d_target": self.outer.d_target,
                            "mode": self.outer.mode, **self.outer.linear.to_json()}
            out["size_floor"] = self.size_floor
        return out

    @classmethod
    def from_json(cls, d: dict) -> "DICode":
        ch = channel_from_json(d["channel"])
        letters = [ch.decode_letter(tuple(x) if isinstance(x, list) else x) for x in d["alphabet"]]
        dists = ch.output_matrix(letters) if ch.has_dist else None
        o = d["outer"]
        if o["kind"] == "explicit":
            lookup = {(_key(x)): i for i, x in enumerate(d["alphabet"])}
            words = np.array([[lookup[_key(x)] for x in w] for w in d["codewords"]], dtype=np.int64)
            words = words.reshape(len(d["codewords"]), d["n"])
            outer = OuterCode(o["k"], d["n"], o["d_target"], o["mode"], words=words)
            code = cls(ch, d["n"], d["decoder"]["kind"], d["decoder"]["delta"], letters, dists,
                       outer, d["entropy_bin"], words=words, meta=d["construction_meta"])
        else:
            lin = gf.LinearCode.from_json(o)
            outer = OuterCode(o["k"], d["n"], o["d_target"], o["mode"], linear=lin)
            code = cls(ch, d["n"], d["decoder"]["kind"], d["decoder"]["delta"], letters, dists,
                       outer, d["entropy_bin"], size_floor=d["size_floor"], meta=d["construction_meta"])
        return code


def _key(x):
    return tuple(x) if isinstance(x, list) else x


def _bin_of(H: float, S: int) -> int:
    """Unit bins [s-1, s) for s = 1..S, the last one closed."""
    s = int(math.floor(H)) + 1
    return min(max(s, 1), S)


# ---------------------------------------------------------------- assembly

def assemble_code(ch: Channel, n: int, alpha: float = 0.2, t: float = 0.1, delta=None,
                  mode: str = "auto", seed: int = 0, resolution=None) -> DICode:
    """Net -> outer code -> entropy binning -> typicality decoders."""
    if n < 1:
        raise ValueError("block length n must be >= 1")
    if isinstance(ch, ArcChannel):
        return assemble_arc_code(ch, n, t, mode=mode, seed=seed)
    check_alpha(alpha)
    Y = ch.alphabet_size
    if delta is None:
        delta = default_delta(n, Y)
    check_delta(delta, n, Y)
    net = build_alphabet_net(ch, n, alpha, resolution)
    k = len(net)
    if k >= 2:
        check_t(t, k)
    outer = build_outer_code(k, n, t, mode, seed)
    letters = net.letters[: outer.k]
    dists = net.dists[: outer.k]
    h = entropies(dists)
    S = max(1, math.ceil(n * math.log2(Y) - 1e-12))
    meta = {
        "alpha": alpha, "t": t, "net_radius": net.radius, "net_size": k,
        "alphabet_used": outer.k, "min_letter_separation": net.min_separation if k > 1 else None,
        "d_target": outer.d_target, "outer_mode": outer.mode, "outer_size": str(outer.size),
        "bins_total": S, "entropy_bin_width": 1.0, "seed": seed,
    }
    if outer.linear is not None:
        meta["outer_certification"] = outer.linear.certification
        meta["outer_dimension"] = outer.linear.dim
    sep = net.min_separation if k > 1 else 0.0
    sq_lower = outer.d_target * sep * sep if k > 1 else 0.0
    meta["certificate"] = {
        "pair_sq_sum_lower": sq_lower,
        "neg_log_overlap_lower": 0.25 * sq_lower,
        "design_floor": 0.25 * outer.d_target * n ** (-2 * alpha),
    }

    words = None
    size_floor = None
    explicit = outer.words is not None or outer.linear.size <= EXPLICIT_LIMIT
    if explicit:
        all_words = outer.words if outer.words is not None else outer.linear.all_words()
        Hs = np.array([math.fsum(h[w]) for w in all_words])
        bins = np.array([_bin_of(v, S) for v in Hs])
        counts = np.bincount(bins, minlength=S + 1)
        b = int(np.argmax(counts))           # lowest index among ties
        words = np.ascontiguousarray(all_words[bins == b])
        meta["bin_counts_nonzero"] = {str(i): int(c) for i, c in enumerate(counts) if c}
        meta["entropy_span"] = float(Hs[bins == b].max() - Hs[bins == b].min())
    else:
        # entropy of any codeword lies in [n min h, n max h]; pigeonhole over the
        # unit bins meeting that range gives a certified size for the largest bin
        lo_b = _bin_of(n * float(h.min()), S)
        hi_b = _bin_of(n * float(h.max()), S)
        occupied = hi_b - lo_b + 1
        size_floor = -(-outer.linear.size // occupied)
        key = derive_key(seed, n, 0xB1)
        msgs = integers(key, np.arange(BIN_SAMPLES * outer.linear.dim, dtype=np.uint64), outer.k)
        sample = outer.linear.encode(msgs.reshape(BIN_SAMPLES, outer.linear.dim))
        sb = np.array([_bin_of(math.fsum(h[w]), S) for w in sample])
        counts = np.bincount(sb, minlength=S + 1)
        b = int(np.argmax(counts))
        meta["occupied_bins"] = occupied
        meta["bin_sample_fraction"] = float(counts[b] / BIN_SAMPLES)
        meta["size_estimate_log2"] = math.log2(outer.linear.size) + math.log2(counts[b] / BIN_SAMPLES)
    meta["entropy_bin_index"] = b
    code = DICode(ch, n, "typicality", float(delta), letters, dists, outer, b, words=words,
                  size_floor=size_floor, meta=meta)
    if explicit and 1 < len(words) <= PAIR_CHECK_LIMIT:
        sq = np.sqrt(dists)
        cost = ((sq[:, None, :] - sq[None, :, :]) ** 2).sum(axis=2)
        from . import backend
        meta["pair_sq_sum_min"] = float(backend.kernels.min_pair_cost(words, np.ascontiguousarray(cost)))
    return code


def assemble_arc_code(ch: ArcChannel, n: int, t: float, mode: str = "auto", seed: int = 0) -> DICode:
    """Grid of k = floor(n t^2) equispaced inputs, outer code, exact support decoder."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    k = max(1, math.floor(n * t * t + 1e-12))
    outer = build_outer_code(k, n, t, mode, seed) if k > 1 else build_outer_code(1, n, t)
    letters = [j / k for j in range(outer.k)]
    theta = ch.theta
    step = arc_distance(theta, 0.0, 1.0 / k) if k > 1 else 0.0
    meta = {"t": t, "grid_size": k, "alphabet_used": outer.k, "d_target": outer.d_target,
            "outer_mode": outer.mode, "outer_size": str(outer.size), "seed": seed,
            "lambda2_certified": (1.0 - step) ** outer.d_target if k > 1 else 0.0,
            "lambda2_design": math.exp(-1.0 / (t * theta))}
    words = outer.words
    size_floor = None
    if words is None:
        if outer.linear.size <= EXPLICIT_LIMIT:
            words = outer.linear.all_words()
        else:
            size_floor = outer.linear.size
    if outer.linear is not None:
        meta["outer_certification"] = outer.linear.certification
    return DICode(ch, n, "arc_support", None, letters, None, outer, None, words=words,
                  size_floor=size_floor, meta=meta)


def arc_pair_error(code: DICode, u, v) -> float:
    return _arc_overlap_idx(code, u, v)


def _arc_overlap_idx(code, u, v):
    from .channels import arc_overlap
    return arc_overlap(code.channel.theta, code.word_letters(u), code.word_letters(v))


def pair_certificate_epsilon(code: DICode, u, v) -> float:
    """exp(-1/4 sum_i |sqrt W_ui - sqrt W_vi|^2), an upper bound on 1 - TV."""
    sq = np.sqrt(code.letter_dists)
    diff = sq[np.asarray(u)] - sq[np.asarray(v)]
    return math.exp(-0.25 * math.fsum((diff * diff).ravel()))
