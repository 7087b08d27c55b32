"""di-lab command line: construct, evaluate, dimension, scaling, superactivate, selftest, replay."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, codec, gf, simulator
from .channels import ArcChannel, BernoulliChannel, DMCChannel, channel_from_json, load_channel
from .geometry import dist_cloud, estimate_dimension

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
SUBCOMMANDS = ("construct", "evaluate", "dimension", "scaling", "superactivate", "selftest")


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------- parsing

def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="di-lab", description="Deterministic identification codes at desk scale.")
    p.add_argument("--version", action="version", version=f"di-lab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, code_params=True):
        sp.add_argument("--channel", help="channel spec JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if code_params:
            sp.add_argument("--alpha", type=float, default=0.2)
            sp.add_argument("--t", type=float, default=0.1)
            sp.add_argument("--delta", type=float, default=None,
                            help="typicality width (default: first-kind target 0.05)")
            sp.add_argument("--mode", choices=codec.MODES, default="auto")
            sp.add_argument("--resolution", type=float, default=None,
                            help="input enumeration resolution")

    sp = sub.add_parser("construct", help="assemble a DI code")
    common(sp)
    sp.add_argument("--n", type=int, default=16)

    sp = sub.add_parser("evaluate", help="estimate first/second kind errors")
    common(sp)
    sp.add_argument("--code", help="code JSON written by construct (instead of --channel)")
    sp.add_argument("--n", type=int, default=16)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--pair-budget", type=int, default=100)
    sp.add_argument("--exact", action="store_true", help="also sum over all outputs (tiny codes)")

    sp = sub.add_parser("dimension", help="box-counting slope of the channel's output cloud")
    common(sp, code_params=False)
    sp.add_argument("--deltas", type=_floats, default=None)
    sp.add_argument("--metric", choices=("tv", "euclidean_on_sphvec"), default="tv")

    sp = sub.add_parser("scaling", help="code size against block length")
    common(sp)
    sp.add_argument("--n-list", type=_ints, default=[16, 32, 64, 128])
    sp.add_argument("--targets", type=_floats, default=None, help="lambda1,lambda2 targets")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--pair-budget", type=int, default=100)

    sp = sub.add_parser("superactivate", help="fractal-restricted Bernoulli pair and its product")
    sp.add_argument("--m", type=_ints, default=[0, 1, 3, 9])
    sp.add_argument("--digits", type=int, default=4)
    sp.add_argument("--n-list", type=_ints, default=[16, 32])
    sp.add_argument("--alpha", type=float, default=0.2)
    sp.add_argument("--t", type=float, default=0.1)
    sp.add_argument("--deltas", type=_floats, default=None)
    sp.add_argument("--swap", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("selftest", help="exhaustive-oracle checks on tiny codes")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("replay", help="rerun a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", help="write here instead of the recorded path")
    return p


# ---------------------------------------------------------------- validation

def _need(cond, msg):
    if not cond:
        raise ValidationError(msg)


def validate(a: argparse.Namespace):
    """Check every numeric flag against its owner's preconditions before any work."""
    _need(0 <= a.seed < 2 ** 64, f"seed={a.seed} must lie in [0, 2^64)")
    if hasattr(a, "alpha"):
        _need(0 < a.alpha < 0.5, f"alpha={a.alpha} outside the window (0, 1/2)")
    if hasattr(a, "t"):
        _need(0 < a.t < 1, f"t={a.t} outside (0, 1)")
    if getattr(a, "delta", None) is not None:
        _need(a.delta > 0, f"delta={a.delta} must be positive")
    if hasattr(a, "n"):
        _need(a.n >= 1, f"n={a.n} must be >= 1")
    if hasattr(a, "n_list"):
        _need(len(a.n_list) > 0 and min(a.n_list) >= 2, "n-list entries must be >= 2")
        _need(a.n_list == sorted(a.n_list), "n-list must be ascending")
    if hasattr(a, "trials"):
        _need(a.trials >= simulator.MIN_TRIALS, f"trials={a.trials} below the minimum {simulator.MIN_TRIALS}")
    if hasattr(a, "pair_budget"):
        _need(a.pair_budget >= 1, "pair-budget must be >= 1")
    if getattr(a, "resolution", None) is not None:
        _need(a.resolution > 0, "resolution must be positive")
    if getattr(a, "targets", None) is not None:
        _need(len(a.targets) == 2 and all(0 <= v <= 1 for v in a.targets),
              "targets must be two numbers lambda1,lambda2 in [0, 1]")
    if getattr(a, "deltas", None) is not None:
        _need(len(a.deltas) >= 4 and min(a.deltas) > 0, "deltas: need >= 4 positive values")
    if hasattr(a, "digits"):
        _need(1 <= a.digits <= 6, f"digits={a.digits} outside 1..6")
        _need(list(a.m) == sorted(set(a.m)) and a.m[0] >= 0, "m must be strictly increasing, >= 0")
    sub = a.subcommand
    if sub in ("construct", "scaling", "dimension") or (sub == "evaluate" and not a.code):
        _need(a.channel or getattr(a, "_channel_spec", None), "--channel is required")


def _channel(a):
    if getattr(a, "_channel_spec", None) is not None:
        return channel_from_json(a._channel_spec)
    try:
        return load_channel(a.channel)
    except OSError as exc:
        raise ValidationError(f"cannot read channel spec: {exc}") from None
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad channel spec: {exc}") from None


def _check_delta(a, ch, n):
    if a.delta is not None and not isinstance(ch, ArcChannel):
        codec.check_delta(a.delta, n, ch.alphabet_size)


# ---------------------------------------------------------------- subcommands

def cmd_construct(a):
    ch = _channel(a)
    _check_delta(a, ch, a.n)
    code = codec.assemble_code(ch, a.n, a.alpha, a.t, a.delta, a.mode, a.seed, a.resolution)
    rows = [[a.n, code.size, *_rates(code.size, a.n), "", "", "", "", a.seed]]
    return code.to_json(), simulator.CSV_COLUMNS, rows


def _rates(N, n):
    rec = simulator.ScalingRecord(n, N)
    return [simulator._fmt(rec.rate_nlogn), simulator._fmt(rec.rate_exp)]


def cmd_evaluate(a):
    if a.code:
        try:
            d = getattr(a, "_code_json", None) or json.loads(Path(a.code).read_text())
            code = codec.DICode.from_json(d)
        except OSError as exc:
            raise ValidationError(f"cannot read code: {exc}") from None
    else:
        ch = _channel(a)
        _check_delta(a, ch, a.n)
        code = codec.assemble_code(ch, a.n, a.alpha, a.t, a.delta, a.mode, a.seed, a.resolution)
    est = simulator.estimate_errors(code, a.trials, a.seed, a.pair_budget)
    out = {"n": code.n, "N": code.size, "estimate": est.to_json()}
    if a.exact:
        l1, l2 = simulator.exact_errors_small(code)
        out["exact"] = {"lambda1": l1, "lambda2": l2}
    rec = simulator.ScalingRecord(code.n, code.size)
    return out, simulator.CSV_COLUMNS, [simulator.csv_row(rec, est, a.seed)]


def _channel_family(ch, metric):
    kind = ch.input_set.kind

    def make(delta):
        if kind in ("fractal_F", "fractal_G"):
            res = min(6, max(1, math.ceil(-math.log10(delta / 4))))
        elif kind == "finite_list":
            res = None
        else:
            res = delta / 4
        xs = ch.input_set.enumerate(res)
        return dist_cloud(ch.output_matrix(xs), metric)
    return make


def cmd_dimension(a):
    ch = _channel(a)
    if isinstance(ch, ArcChannel):
        raise ValidationError("dimension needs a finite-output channel")
    deltas = a.deltas or [float(v) for v in np.geomspace(0.25, 1e-3, 8)]
    est = estimate_dimension(_channel_family(ch, a.metric), deltas, with_packing=False)
    rows = [[d, c, r] for d, c, r in zip(est.deltas, est.counts, est.raw_counts)]
    return est.to_json(), ("delta", "count", "raw_count"), rows


def cmd_scaling(a):
    ch = _channel(a)
    for n in a.n_list:
        _check_delta(a, ch, n)
    recs = simulator.scaling_sweep(ch, a.n_list, a.alpha, a.t, a.delta,
                                   tuple(a.targets) if a.targets else None,
                                   a.trials, a.seed, a.pair_budget, a.mode, a.resolution)
    rows = [simulator.csv_row(r, seed=a.seed) for r in recs]
    return {"records": [r.to_json() for r in recs]}, simulator.CSV_COLUMNS, rows


def cmd_superactivate(a):
    rep = simulator.superactivation_demo(tuple(a.m), a.digits, a.n_list, a.alpha, a.t,
                                         a.deltas, a.seed, a.swap)
    rows = []
    for name, recs in rep["sweeps"].items():
        for r in recs:
            rows.append([name, r["n"], r["N"], simulator._fmt(r["rate_nlogn"]),
                         simulator._fmt(r["rate_exp"]),
                         simulator._fmt(rep["dimension"][name]["lower_slope"])])
    return rep, ("channel", "n", "N", "rate_nlogn", "rate_exp", "dimension_lower_slope"), rows


def selftest_checks(seed=0, trials=100_000):
    """(name, passed, detail) for the exhaustive-oracle invariants at n <= 8."""
    out = []
    b = BernoulliChannel()
    for n in (4, 8):
        for alpha in (0.15, 0.3):
            code = codec.assemble_code(b, n, alpha=alpha, t=0.25, delta=0.5 * math.sqrt(n), seed=seed)
            au = simulator.lemma_audit(code)
            out.append((f"lemma1_floor n={n} alpha={alpha}", au.lambda1_ok,
                        f"max lambda1={au.lambda1_max:.6g} floor={au.lambda1_floor:.6g}"))
            out.append((f"lemma2_ceiling n={n} alpha={alpha}", au.lambda2_violations == 0,
                        f"{au.pairs} pairs, violations={au.lambda2_violations}"))
            ids, words = code.sample_codewords(seed, 1)
            w = words[0]
            exact = 1.0 - simulator.exact_acceptance(code, w, w)
            hits = simulator.mc_acceptance(code, w, w, simulator.derive_key(seed, ids[0], ids[0]), trials)
            mc = 1.0 - hits / trials
            sig = math.sqrt(max(exact * (1 - exact), 1e-300) / trials)
            out.append((f"mc_vs_exact n={n} alpha={alpha}", abs(mc - exact) <= 3 * sig + 1e-15,
                        f"mc={mc:.6g} exact={exact:.6g} 3sigma={3 * sig:.3g}"))
    ident = DMCChannel([[1.0, 0.0], [0.0, 1.0]])
    code = codec.assemble_code(ident, 8, alpha=0.2, t=1e-6, delta=1e-9)
    l1, l2 = simulator.exact_errors_small(code) if code.size <= simulator.EXACT_CODE_LIMIT else (None, None)
    out.append(("identity_dmc_zero_error", l1 == 0.0 and l2 == 0.0, f"N={code.size}"))
    arc = codec.assemble_code(ArcChannel(0.5), 50, t=0.2)
    est = simulator.estimate_errors(arc, 100, seed, 50)
    out.append(("arc_support_exact", est.lambda1_hat == 0.0 and est.lambda2_hat <= math.exp(-1 / (0.2 * 0.5)),
                f"lambda2={est.lambda2_hat}"))
    return out


def cmd_selftest(a):
    checks = selftest_checks(a.seed, a.trials)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=sys.stderr)
    payload = {"checks": [{"name": n, "passed": bool(ok), "detail": d} for n, ok, d in checks],
               "all_passed": all(ok for _, ok, _ in checks)}
    rows = [[n, int(bool(ok)), d] for n, ok, d in checks]
    return payload, ("check", "passed", "detail"), rows


COMMANDS = {"construct": cmd_construct, "evaluate": cmd_evaluate, "dimension": cmd_dimension,
            "scaling": cmd_scaling, "superactivate": cmd_superactivate, "selftest": cmd_selftest}


# ---------------------------------------------------------------- output

def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable) + "\n"


def render(payload, columns, rows, fmt) -> str:
    if fmt == "json":
        return dumps(payload)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def manifest_for(a: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(a).items() if k != "out" and not k.startswith("_")}
    m = {"tool": "di-lab", "version": __version__, "subcommand": a.subcommand,
         "seed": a.seed, "config": cfg}
    if getattr(a, "channel", None):
        m["channel_spec"] = getattr(a, "_channel_spec", None) or json.loads(Path(a.channel).read_text())
    if getattr(a, "code", None):
        m["code_json"] = getattr(a, "_code_json", None) or json.loads(Path(a.code).read_text())
    return m


def _write(a, text):
    if a.out:
        Path(a.out).write_text(text)
        Path(a.out + ".manifest.json").write_text(dumps(manifest_for(a)))
    else:
        sys.stdout.write(text)


def namespace_from_manifest(path, out=None) -> argparse.Namespace:
    """Rebuild a recorded run; embedded channel and code specs replace the file paths."""
    m = json.loads(Path(path).read_text())
    a = argparse.Namespace(**m["config"])
    a.out = out
    a._channel_spec = m.get("channel_spec")
    a._code_json = m.get("code_json")
    return a


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if a.subcommand == "replay":
            a = namespace_from_manifest(a.manifest, a.out)
        validate(a)
        payload, cols, rows = COMMANDS[a.subcommand](a)
        _write(a, render(payload, cols, rows, a.format))
        if a.subcommand == "selftest" and not payload["all_passed"]:
            return EXIT_RUNTIME
        return EXIT_OK
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_INVALID
    except gf.RedrawExhausted as exc:
        print(f"runtime failure: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
