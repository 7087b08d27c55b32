"""Time the compiled kernels against the numpy fallback and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import time

import numpy as np

from di_lab import backend, gf
from di_lab.channels import BernoulliChannel
from di_lab.codec import assemble_code


def _time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    code = assemble_code(BernoulliChannel(), 8, alpha=0.2, t=0.25, delta=1.0)
    w = np.ascontiguousarray(code.words[0])
    v = np.ascontiguousarray(code.words[1])
    d = code.decoder(v)
    cdf, logp = code.cdf(), code.logp()
    yield "mc_accept_count (n=8, 2e5 trials)", lambda k: k.mc_accept_count(
        cdf, logp, w, v, d.lo, d.hi, 12345, 200_000)

    rng = np.random.default_rng(0)
    pts = np.ascontiguousarray(np.sort(rng.random((20_000, 2)), axis=0))
    yield "greedy_pack (2e4 pts, 2-d grid)", lambda k: k.greedy_pack(pts, 0.01 ** 2, 0.01 * (1 + 1e-9))
    pts5 = np.ascontiguousarray(rng.random((3000, 5)))
    yield "greedy_pack (3e3 pts, 5-d brute)", lambda k: k.greedy_pack(pts5, 0.3 ** 2, 0.0)

    pos, sh = gf._ball_patterns(2, 16, 4)
    yield "lexicode (k=2, n=16, d=4)", lambda k: k.lexicode(2, 16, pos, sh)

    words = np.ascontiguousarray(code.words[:600])
    sq = np.sqrt(code.letter_dists)
    cost = np.ascontiguousarray(((sq[:, None, :] - sq[None, :, :]) ** 2).sum(axis=2))
    yield "min_pair_cost (600 words)", lambda k: k.min_pair_cost(words, cost)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args()
    names = backend.available()
    if "cython" not in names:
        print("compiled kernels not built; only the fallback is timed")
    rows = []
    print(f"{'kernel':38s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup  agree")
    for label, fn in cases():
        times, outs = {}, {}
        for n in names:
            times[n], outs[n] = _time(lambda: fn(backend.get(n)), args.repeat)
        agree = all(np.array_equal(np.asarray(outs[n]), np.asarray(outs[names[0]])) for n in names)
        sp = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:38s} " + " ".join(f"{times[n]:10.4f}" for n in names) + f"   {sp:7.1f}x  {agree}")
        rows.append({"kernel": label, "seconds": times, "speedup": sp, "agree": agree})
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
