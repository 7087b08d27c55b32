"""Monte-Carlo and exhaustive error evaluation, scaling sweeps, superactivation demo."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import beta as beta_dist

from . import backend
from .channels import BernoulliChannel, Channel, ProductChannel, arc_overlap, fractal_pair
from .codec import DICode, assemble_code, lemma1_bound
from .geometry import dist_cloud, estimate_dimension, line_cloud, product_cloud
from .rng import derive_key, integers, permutation

MIN_TRIALS = 100
EXACT_LIMIT = 1 << 24
EXACT_CODE_LIMIT = 4096
OUTPUT_CHUNK = 1 << 16


def n_threads() -> int:
    v = int(os.environ.get("DI_LAB_THREADS", "0") or 0)
    return v if v > 0 else (os.cpu_count() or 1)


def clopper_pearson(k: int, n: int, level=0.95):
    """Exact binomial interval for k successes out of n."""
    a = (1 - level) / 2
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - a, k + 1, n - k))
    return lo, hi


def _halfwidth(k, n):
    lo, hi = clopper_pearson(k, n)
    return (hi - lo) / 2


@dataclass
class ErrorEstimate:
    lambda1_hat: float
    lambda2_hat: float | None
    trials1: int
    trials2: int
    pair_sampling: str
    seed: int
    ci95_halfwidth1: float
    ci95_halfwidth2: float | None
    lambda1_mean: float | None = None
    lambda2_mean: float | None = None
    method: str = "monte-carlo"
    worst_index: object = None
    worst_pair: object = None
    indices_tested: int = 0
    pairs_tested: int = 0

    def to_json(self):
        d = asdict(self)
        for k in ("worst_index", "worst_pair"):
            if d[k] is not None:
                d[k] = [str(v) for v in d[k]] if isinstance(d[k], (list, tuple)) else str(d[k])
        return d


# ---------------------------------------------------------------- Monte Carlo

def _mc_hits(code: DICode, cdf, logp, tx, dec, key, trials) -> int:
    d = code.decoder(dec)
    return int(backend.kernels.mc_accept_count(
        cdf, logp, np.ascontiguousarray(tx, dtype=np.int64),
        np.ascontiguousarray(dec, dtype=np.int64), d.lo, d.hi, key, trials))


def mc_acceptance(code: DICode, tx, dec, key: int, trials: int) -> int:
    """Accepted trials when sending tx and testing with the decoder of dec."""
    return _mc_hits(code, code.cdf(), code.logp(), tx, dec, key, trials)


def _index_sample(code: DICode, budget: int, seed: int):
    """(ids, words) of codewords to test; all of them when the code is small."""
    if code.explicit and code.size <= budget:
        return list(range(code.size)), code.words
    return code.sample_codewords(derive_key(seed, 0x1D), min(budget, code.size))


def _pair_sample(code: DICode, budget: int, seed: int):
    """Ordered pairs (id_j, w_j, id_k, w_k) with j != k."""
    N = code.size
    if code.explicit:
        total = N * (N - 1)
        if total <= budget:
            sel = range(total)
            mode = "exhaustive"
        else:
            mode = f"sampled({budget})"
            if total <= EXACT_LIMIT:
                sel = permutation(derive_key(seed, 0x9A1), total)[:budget]
                sel = np.sort(sel)
            else:
                seen, sel, c = set(), [], 0
                while len(sel) < budget:
                    v = int(integers(derive_key(seed, 0x9A2), [c], total)[0])
                    c += 1
                    if v not in seen:
                        seen.add(v)
                        sel.append(v)
                sel.sort()
        out = []
        for s in sel:
            j, r = divmod(int(s), N - 1)
            k = r if r < j else r + 1
            out.append((j, code.words[j], k, code.words[k]))
        return out, mode
    ids, words = code.sample_codewords(derive_key(seed, 0x9A3), 2 * budget)
    out = [(ids[2 * i], words[2 * i], ids[2 * i + 1], words[2 * i + 1]) for i in range(budget)]
    return out, f"sampled({budget})"


def _arc_estimate(code: DICode, seed: int, pair_budget: int) -> ErrorEstimate:
    if code.size < 2:
        return ErrorEstimate(0.0, None, 0, 0, "not-applicable", seed, 0.0, None,
                             lambda1_mean=0.0, method="exact-support")
    pairs, mode = _pair_sample(code, pair_budget, seed)
    vals = [arc_overlap(code.channel.theta, code.word_letters(u), code.word_letters(v))
            for _, u, _, v in pairs]
    i = int(np.argmax(vals))
    return ErrorEstimate(0.0, float(vals[i]), 0, 0, mode, seed, 0.0, 0.0,
                         lambda1_mean=0.0, lambda2_mean=math.fsum(vals) / len(vals),
                         method="exact-support", worst_pair=(pairs[i][0], pairs[i][2]),
                         pairs_tested=len(pairs))


def estimate_errors(code: DICode, trials: int = 100_000, seed: int = 0,
                    pair_budget: int = 100, index_budget: int | None = None) -> ErrorEstimate:
    """Max over tested codewords (pairs) of the per-index error frequency.

    Each codeword j (ordered pair j, k) gets its own stream keyed by
    (seed, j, k), so results do not depend on scheduling.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"trials={trials} below the minimum {MIN_TRIALS}")
    if code.size < 1:
        raise ValueError("empty code")
    if code.decoder_kind == "arc_support":
        return _arc_estimate(code, seed, pair_budget)
    index_budget = index_budget or pair_budget
    cdf, logp = code.cdf(), code.logp()
    ids, words = _index_sample(code, index_budget, seed)

    def miss(args):
        j, w = args
        return trials - _mc_hits(code, cdf, logp, w, w, derive_key(seed, j, j), trials)

    with ThreadPoolExecutor(n_threads()) as ex:
        misses = list(ex.map(miss, zip(ids, words)))
    i1 = int(np.argmax(misses))
    est = ErrorEstimate(misses[i1] / trials, None, trials, 0, "not-applicable", seed,
                        _halfwidth(misses[i1], trials), None,
                        lambda1_mean=sum(misses) / (trials * len(misses)),
                        worst_index=ids[i1], indices_tested=len(ids))
    if code.size < 2:
        return est
    pairs, mode = _pair_sample(code, pair_budget, seed)

    def false_hit(p):
        j, u, k, v = p
        return _mc_hits(code, cdf, logp, u, v, derive_key(seed, j, k), trials)

    with ThreadPoolExecutor(n_threads()) as ex:
        hits = list(ex.map(false_hit, pairs))
    i2 = int(np.argmax(hits))
    est.lambda2_hat = hits[i2] / trials
    est.trials2 = trials
    est.pair_sampling = mode
    est.ci95_halfwidth2 = _halfwidth(hits[i2], trials)
    est.lambda2_mean = sum(hits) / (trials * len(hits))
    est.worst_pair = (pairs[i2][0], pairs[i2][2])
    est.pairs_tested = len(pairs)
    return est


# ---------------------------------------------------------------- exhaustive

def _outputs(Y: int, n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    pw = Y ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // pw[None, :]) % Y


def _log_probs(logp, w, ys) -> np.ndarray:
    # same accumulation order as the sampling kernel, so thresholds agree bit for bit
    acc = np.zeros(len(ys))
    for i in range(len(w)):
        acc = acc + logp[w[i], ys[:, i]]
    return acc


def _check_small(code: DICode):
    if code.decoder_kind != "typicality":
        raise ValueError("exhaustive evaluation applies to typicality decoders")
    Y = code.channel.alphabet_size
    if Y ** code.n > EXACT_LIMIT:
        raise ValueError(f"|Y|^n = {Y}^{code.n} exceeds the exhaustive limit 2^24")
    return Y


def exact_acceptance(code: DICode, tx, dec) -> float:
    """W_tx(T_dec) summed exactly over all output words."""
    Y = _check_small(code)
    logp = code.logp()
    d = code.decoder(dec)
    tx = np.asarray(tx, dtype=np.int64)
    dec = np.asarray(dec, dtype=np.int64)
    parts = []
    for s in range(0, Y ** code.n, OUTPUT_CHUNK):
        ys = _outputs(Y, code.n, s, min(Y ** code.n, s + OUTPUT_CHUNK))
        acc = _log_probs(logp, dec, ys)
        mask = (acc >= d.lo) & (acc <= d.hi)
        if mask.any():
            parts.extend(np.exp2(_log_probs(logp, tx, ys[mask])).tolist())
    return math.fsum(parts)


def exact_acceptance_matrix(code: DICode) -> np.ndarray:
    """A[j, k] = W_{u_j}(T_{u_k}) for every codeword pair of an explicit code."""
    Y = _check_small(code)
    if not code.explicit or code.size > EXACT_CODE_LIMIT:
        raise ValueError("exhaustive pair evaluation needs an explicit code of <= 4096 words")
    logp = code.logp()
    W = code.words
    N, M = len(W), Y ** code.n
    A = np.zeros((N, N))
    H = np.array([code.word_entropy(w) for w in W])
    r = code.delta * math.sqrt(code.n)
    for s in range(0, M, OUTPUT_CHUNK):
        ys = _outputs(Y, code.n, s, min(M, s + OUTPUT_CHUNK))
        L = np.stack([_log_probs(logp, w, ys) for w in W])          # (N, chunk)
        acc = (L >= (-H - r)[:, None]) & (L <= (-H + r)[:, None])
        A += np.exp2(L) @ acc.T.astype(np.float64)
    # diagonal with compensated sums
    for j in range(N):
        A[j, j] = exact_acceptance(code, W[j], W[j])
    return np.clip(A, 0.0, 1.0)


def exact_errors_small(code: DICode):
    """(lambda1_exact, lambda2_exact) as maxima over codewords and ordered pairs."""
    A = exact_acceptance_matrix(code)
    N = len(A)
    l1 = float(max(0.0, 1.0 - A.diagonal().min()))
    if N < 2:
        return l1, None
    off = A.copy()
    np.fill_diagonal(off, -1.0)
    j, k = np.unravel_index(int(np.argmax(off)), off.shape)
    l2 = exact_acceptance(code, code.words[j], code.words[k])
    return l1, float(l2)


def certified_epsilon_matrix(code: DICode) -> np.ndarray:
    """eps[j, k] = exp(-1/4 sum_i |sqrt W_{u_j,i} - sqrt W_{u_k,i}|^2)."""
    sq = np.sqrt(code.letter_dists)
    cost = ((sq[:, None, :] - sq[None, :, :]) ** 2).sum(axis=2)
    W = code.words
    S = np.zeros((len(W), len(W)))
    for i in range(code.n):
        S += cost[W[:, i][:, None], W[:, i][None, :]]
    return np.exp(-0.25 * S)


@dataclass
class LemmaAudit:
    codewords: int
    pairs: int
    lambda1_max: float
    lambda1_floor: float
    lambda1_ok: bool
    lambda2_violations: int
    worst_margin: float | None

    def __bool__(self):
        return self.lambda1_ok and self.lambda2_violations == 0


def lemma_audit(code: DICode) -> LemmaAudit:
    """Exact first-kind errors against the concentration floor and every
    ordered pair against the second-kind ceiling with its certified epsilon."""
    A = exact_acceptance_matrix(code)
    N = len(A)
    Y = code.channel.alphabet_size
    floor = lemma1_bound(code.delta, Y)
    l1 = 1.0 - A.diagonal()
    H = np.array([code.word_entropy(w) for w in code.words])
    bad, worst = 0, None
    if N > 1:
        eps = certified_epsilon_matrix(code)           # [j sent, k decoder]
        with np.errstate(divide="ignore", over="ignore"):
            log2_term = (2 * code.delta * math.sqrt(code.n) + (H[None, :] - H[:, None])
                         + np.log2(eps))
            bound = floor + eps + np.where(eps > 0, np.exp2(np.minimum(log2_term, 1000.0)), 0.0)
        margin = bound - A
        np.fill_diagonal(margin, np.inf)
        worst = float(margin.min())
        bad = int((margin < -1e-12).sum())
    return LemmaAudit(N, N * (N - 1), float(l1.max()), floor, bool(l1.max() <= floor + 1e-12),
                      bad, worst)


# ---------------------------------------------------------------- sweeps

@dataclass
class ScalingRecord:
    n: int
    code_size: int | None
    params: dict = field(default_factory=dict)
    errors: ErrorEstimate | None = None
    targets_met: bool | None = None
    failure: str | None = None

    @property
    def log2N(self):
        return math.log2(self.code_size) if self.code_size else None

    @property
    def rate_exp(self):
        return None if self.code_size is None else self.log2N / self.n

    @property
    def rate_nlogn(self):
        return None if self.code_size is None else self.log2N / (self.n * math.log2(self.n))

    @property
    def rate_nloglogn(self):
        if self.code_size is None or self.n < 3:
            return None
        return self.log2N / (self.n * math.log2(math.log2(self.n)))

    def to_json(self):
        return {"n": self.n, "N": self.code_size,
                "log2N": self.log2N, "rate_nlogn": self.rate_nlogn, "rate_exp": self.rate_exp,
                "rate_nloglogn": self.rate_nloglogn, "params": self.params,
                "errors": self.errors.to_json() if self.errors else None,
                "targets_met": self.targets_met, "failure": self.failure}


CSV_COLUMNS = ("n", "N", "rate_nlogn", "rate_exp", "lambda1_hat", "ci1", "lambda2_hat", "ci2", "seed")


def csv_row(rec: ScalingRecord | None = None, est: ErrorEstimate | None = None, seed=0) -> list:
    e = est if est is not None else (rec.errors if rec is not None else None)
    return [rec.n if rec else "", rec.code_size if rec and rec.code_size is not None else "",
            _fmt(rec.rate_nlogn) if rec else "", _fmt(rec.rate_exp) if rec else "",
            _fmt(e.lambda1_hat) if e else "", _fmt(e.ci95_halfwidth1) if e else "",
            _fmt(e.lambda2_hat) if e else "", _fmt(e.ci95_halfwidth2) if e else "",
            e.seed if e else seed]


def _fmt(v):
    return "" if v is None else repr(float(v))


def scaling_sweep(ch: Channel, n_list, alpha=0.2, t=0.1, delta=None, error_targets=None,
                  trials: int = 10_000, seed: int = 0, pair_budget: int = 50,
                  mode: str = "auto", resolution=None) -> list:
    """One code per n; error estimates only when targets are given."""
    n_list = list(n_list)
    if n_list != sorted(n_list):
        raise ValueError("n_list must be ascending")
    out = []
    for n in n_list:
        params = {"alpha": alpha, "t": t, "delta": delta, "mode": mode, "seed": seed}
        try:
            code = assemble_code(ch, n, alpha=alpha, t=t, delta=delta, mode=mode, seed=seed,
                                 resolution=resolution)
        except ValueError:
            raise
        except Exception as exc:       # runtime failures are recorded per n
            out.append(ScalingRecord(n, None, params, failure=f"{type(exc).__name__}: {exc}"))
            continue
        params["delta"] = code.delta
        params["net_size"] = code.meta.get("net_size", code.meta.get("grid_size"))
        params["explicit"] = code.explicit
        rec = ScalingRecord(n, code.size, params)
        if error_targets is not None:
            est = estimate_errors(code, trials, seed, pair_budget)
            rec.errors = est
            l1, l2 = error_targets
            rec.targets_met = est.lambda1_hat <= l1 and (est.lambda2_hat is None or est.lambda2_hat <= l2)
        out.append(rec)
    return out


# ---------------------------------------------------------------- superactivation

def default_ladder(D: int, points: int = 10) -> list:
    return [float(v) for v in np.geomspace(0.25, 0.5 * 10.0 ** -(D - 1), points)]


def superactivation_demo(m=(0, 1, 3, 9), D: int = 4, n_list=(16, 32), alpha=0.2, t=0.1,
                         deltas=None, seed=0, swap=False) -> dict:
    """Dimension estimates and code sizes for B|F, B|G and their product."""
    if not 1 <= D <= 6:
        raise ValueError("digit count D must lie in 1..6")
    F, G = fractal_pair(m)
    if swap:
        F, G = G, F
    deltas = list(deltas) if deltas is not None else default_ladder(D)
    xf, xg = F.enumerate(D), G.enumerate(D)
    # Bernoulli TV is |x - x'|, so the TV cloud of B restricted to a set is the set itself
    cf, cg = line_cloud(xf), line_cloud(xg)
    dims = {
        "F": estimate_dimension(cf, deltas, with_packing=False),
        "G": estimate_dimension(cg, deltas, with_packing=False),
        "FxG": estimate_dimension(product_cloud(cf, cg), deltas, with_packing=False),
    }
    bf, bg = BernoulliChannel(F), BernoulliChannel(G)
    sph = {}
    sf = dist_cloud(bf.output_matrix(xf), "euclidean_on_sphvec")
    sg = dist_cloud(bg.output_matrix(xg), "euclidean_on_sphvec")
    for name, cl in (("F", sf), ("G", sg), ("FxG", product_cloud(sf, sg))):
        sph[name] = estimate_dimension(cl, deltas, with_packing=False)
    sweeps = {}
    for name, ch in (("F", bf), ("G", bg), ("FxG", ProductChannel(bf, bg))):
        sweeps[name] = scaling_sweep(ch, n_list, alpha, t, seed=seed, resolution=D)
    comparison = []
    for i, n in enumerate(n_list):
        a, b, p = (sweeps[k][i].code_size for k in ("F", "G", "FxG"))
        ok = None if None in (a, b, p) else p > a * b
        comparison.append({"n": n, "N_F": a, "N_G": b, "N_FxG": p, "product_exceeds": ok})
    return {
        "m": list(m), "D": D, "swap": swap, "deltas": deltas,
        "dimension": {k: v.to_json() for k, v in dims.items()},
        "dimension_spherised": {k: v.to_json() for k, v in sph.items()},
        "sweeps": {k: [r.to_json() for r in v] for k, v in sweeps.items()},
        "comparison": comparison,
    }
