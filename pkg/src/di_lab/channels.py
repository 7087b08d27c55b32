"""Parametric channel families and their input sets."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import stats

from .prob_core import Dist, SeqDist
from .rng import derive_key, inverse_cdf, uniform

DEFAULT_M = (0, 1, 3, 9, 27, 81)
INPUT_KINDS = ("interval", "finite_list", "log_sequence", "poly_sequence", "exp_sequence",
               "fractal_F", "fractal_G", "product")


# ---------------------------------------------------------------- input sets

@dataclass(frozen=True)
class InputSet:
    kind: str
    lo: float = 0.0
    hi: float = 1.0
    values: tuple = ()
    s: float = 1.0
    c: float = 2.0
    m: tuple = DEFAULT_M
    left: Any = None
    right: Any = None

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise ValueError(f"unknown input set kind {self.kind!r}")
        if self.kind == "interval" and not (0 <= self.lo < self.hi):
            raise ValueError(f"interval needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")
        if self.kind == "finite_list":
            if not self.values:
                raise ValueError("finite_list needs at least one value")
            object.__setattr__(self, "values", tuple(sorted(set(self.values))))
        if self.kind == "poly_sequence" and not self.s > 0:
            raise ValueError("poly_sequence needs s > 0")
        if self.kind == "exp_sequence" and not self.c > 1:
            raise ValueError("exp_sequence needs c > 1")
        if self.kind in ("fractal_F", "fractal_G"):
            m = tuple(int(v) for v in self.m)
            if not m or m[0] != 0 or any(b <= a for a, b in zip(m, m[1:])):
                raise ValueError("m_sequence must be strictly increasing integers starting at 0")
            object.__setattr__(self, "m", m)
        if self.kind == "product" and (self.left is None or self.right is None):
            raise ValueError("product input set needs left and right")

    # membership ---------------------------------------------------------
    def contains(self, x) -> bool:
        k = self.kind
        if k == "product":
            try:
                a, b = x
            except (TypeError, ValueError):
                return False
            return self.left.contains(a) and self.right.contains(b)
        if isinstance(x, (tuple, list)):
            return False
        x = float(x)
        if k == "interval":
            return self.lo <= x <= self.hi
        if k == "finite_list":
            return x in self.values
        if x == 0.0:
            return k in ("log_sequence", "poly_sequence", "exp_sequence", "fractal_F", "fractal_G")
        if k == "exp_sequence":
            if not 0 < x <= 1:
                return False
            t = round(-math.log(x) / math.log(self.c))
            return t >= 0 and self.c ** (-t) == x
        if k == "poly_sequence":
            if not 0 < x <= 1:
                return False
            t = round(x ** (-1.0 / self.s))
            return any(t2 >= 1 and t2 ** (-self.s) == x for t2 in (t - 1, t, t + 1))
        if k == "log_sequence":
            if not 0 < x <= 1 / math.log(2):
                return False
            t = round(math.exp(1.0 / x))
            return any(t2 >= 2 and 1.0 / math.log(t2) == x for t2 in (t - 1, t, t + 1))
        # fractal sets: an exact decimal with zeros where required
        digits = _fractal_digits(x)
        if digits is None:
            return False
        zero = _forced_zero_places(self.m, len(digits), even=(k == "fractal_F"))
        return all(d == 0 for r, d in enumerate(digits, start=1) if r in zero)

    # enumeration --------------------------------------------------------
    def enumerate(self, resolution=None) -> list:
        return enumerate_input_set(self, resolution)

    def to_json(self) -> dict:
        k = self.kind
        if k == "interval":
            return {"kind": k, "lo": self.lo, "hi": self.hi}
        if k == "finite_list":
            return {"kind": k, "values": list(self.values)}
        if k == "log_sequence":
            return {"kind": k}
        if k == "poly_sequence":
            return {"kind": k, "s": self.s}
        if k == "exp_sequence":
            return {"kind": k, "c": self.c}
        if k in ("fractal_F", "fractal_G"):
            return {"kind": k, "m": list(self.m)}
        return {"kind": k, "left": self.left.to_json(), "right": self.right.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "InputSet":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind == "product":
            return cls("product", left=cls.from_json(d["left"]), right=cls.from_json(d["right"]))
        if kind == "finite_list":
            return cls(kind, values=tuple(d["values"]))
        if kind in ("fractal_F", "fractal_G"):
            return cls(kind, m=tuple(d.get("m", DEFAULT_M)))
        allowed = {"lo", "hi", "s", "c"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"unexpected input_set fields {sorted(extra)}")
        return cls(kind, **{k: float(v) for k, v in d.items()})


def interval(lo=0.0, hi=1.0) -> InputSet:
    return InputSet("interval", lo=float(lo), hi=float(hi))


def fractal_pair(m=DEFAULT_M):
    return InputSet("fractal_F", m=tuple(m)), InputSet("fractal_G", m=tuple(m))


def _extend_m(m, D):
    m = list(m)
    while m[-1] < D:
        m.append(max(3 * m[-1], m[-1] + 1))
    return m


def _forced_zero_places(m, D, even: bool) -> set:
    """Decimal places r <= D forced to 0: m_k < r <= m_{k+1} with k even (F) or odd (G)."""
    m = _extend_m(m, D)
    out = set()
    for k in range(len(m) - 1):
        if (k % 2 == 0) == even:
            out.update(r for r in range(m[k] + 1, m[k + 1] + 1) if r <= D)
    return out


def _fractal_digits(x: float, max_digits=15):
    if not 0 <= x < 1:
        return None
    for D in range(1, max_digits + 1):
        scaled = round(x * 10 ** D)
        if scaled / 10 ** D == x:
            return [int(ch) for ch in str(scaled).zfill(D)]
    return None


def _digits_from_resolution(resolution) -> int:
    if resolution is None:
        return 4
    if isinstance(resolution, (int, np.integer)):
        return int(resolution)
    return max(1, math.ceil(-math.log10(float(resolution)) - 1e-12))


def enumerate_input_set(s: InputSet, resolution=None) -> list:
    """Finite sorted representatives of an input set.

    resolution: grid spacing for intervals; smallest kept element (float) or
    maximum number of terms (int) for sequences; number of decimal digits
    (int) or finest scale (float) for the fractal sets.
    """
    if resolution is not None and not (float(resolution) > 0):
        raise ValueError("resolution must be positive")
    k = s.kind
    if k == "interval":
        h = float(resolution) if resolution is not None else (s.hi - s.lo) / 1000
        m = int(math.floor((s.hi - s.lo) / h + 1e-9))
        pts = [s.lo + i * h for i in range(m + 1)]
        if pts[-1] < s.hi:
            pts.append(s.hi)
        pts[-1] = min(pts[-1], s.hi)
        return sorted(set(pts))
    if k == "finite_list":
        return list(s.values)
    if k in ("log_sequence", "poly_sequence", "exp_sequence"):
        gen = {
            "log_sequence": (2, lambda t: 1.0 / math.log(t)),
            "poly_sequence": (1, lambda t: float(t) ** (-s.s)),
            "exp_sequence": (0, lambda t: s.c ** (-t)),
        }[k]
        t0, f = gen
        out = {0.0}
        if resolution is None:
            resolution = 64
        if isinstance(resolution, (int, np.integer)):
            for t in range(t0, t0 + int(resolution)):
                out.add(f(t))
        else:
            floor_ = float(resolution)
            t = t0
            while True:
                v = f(t)
                out.add(v)
                if v < floor_:
                    break
                t += 1
                if t > 10 ** 7:
                    raise ValueError("sequence truncation needs more than 1e7 terms")
        return sorted(out)
    if k in ("fractal_F", "fractal_G"):
        D = _digits_from_resolution(resolution)
        if D < 1 or D > 6:
            raise ValueError("fractal enumeration supports 1..6 digits")
        zero = _forced_zero_places(s.m, D, even=(k == "fractal_F"))
        choices = [[0] if r in zero else range(10) for r in range(1, D + 1)]
        vals = set()
        for digs in itertools.product(*choices):
            num = 0
            for d in digs:
                num = num * 10 + d
            vals.add(num / 10 ** D)
        return sorted(vals)
    left = enumerate_input_set(s.left, resolution)
    right = enumerate_input_set(s.right, resolution)
    return [(a, b) for a in left for b in right]


# ---------------------------------------------------------------- channels

class Channel:
    family = "abstract"
    has_dist = True

    def __init__(self, input_set: InputSet):
        self.input_set = input_set

    @property
    def alphabet_size(self) -> int:
        raise NotImplementedError

    def check_input(self, x):
        if not self.input_set.contains(x):
            raise ValueError(f"input {x!r} is outside the {self.input_set.kind} input set")

    def _row(self, x) -> np.ndarray:
        raise NotImplementedError

    def output_dist(self, x) -> Dist:
        self.check_input(x)
        return Dist(self._row(x))

    def output_matrix(self, xs) -> np.ndarray:
        """Stacked output pmfs, no membership check (inputs come from enumeration)."""
        return np.stack([Dist(self._row(x)).probs for x in xs])

    def params_json(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {"family": self.family, "params": self.params_json(),
                "input_set": self.input_set.to_json()}

    def encode_letter(self, x):
        return x

    def decode_letter(self, x):
        return x

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_json())})"


class BernoulliChannel(Channel):
    family = "bernoulli"

    def __init__(self, input_set: InputSet | None = None):
        super().__init__(input_set or interval(0.0, 1.0))
        for v in _numeric_bounds(self.input_set):
            if not 0 <= v <= 1:
                raise ValueError("bernoulli inputs must lie in [0, 1]")

    @property
    def alphabet_size(self):
        return 2

    def _row(self, x):
        x = float(x)
        return np.array([1.0 - x, x])

    def output_matrix(self, xs):
        x = np.asarray(xs, dtype=np.float64)
        return np.stack([1.0 - x, x], axis=1)


class PoissonChannel(Channel):
    """Discrete-time Poisson channel truncated to {0..y_max}.

    y_max is the smallest integer whose upper tail at the largest admissible
    input is <= tail_bound; rows are renormalised after truncation.
    """

    family = "poisson"

    def __init__(self, input_set: InputSet | None = None, tail_bound=1e-12, y_max=None):
        super().__init__(input_set or interval(0.0, 10.0))
        if not 0 < tail_bound <= 1e-12:
            raise ValueError("tail_bound must be in (0, 1e-12]")
        self.tail_bound = float(tail_bound)
        self.x_max = max(_numeric_bounds(self.input_set))
        need = poisson_y_max(self.x_max, self.tail_bound)
        if y_max is not None and int(y_max) < need:
            raise ValueError(f"y_max={y_max} leaves tail mass above {tail_bound} at x={self.x_max}")
        self.y_max = int(y_max) if y_max is not None else need

    @property
    def alphabet_size(self):
        return self.y_max + 1

    def _row(self, x):
        x = float(x)
        y = np.arange(self.y_max + 1)
        if x == 0.0:
            p = np.zeros(self.y_max + 1)
            p[0] = 1.0
            return p
        p = stats.poisson.pmf(y, x)
        return p / math.fsum(p)

    def params_json(self):
        return {"tail_bound": self.tail_bound, "y_max": self.y_max}


def poisson_y_max(x_max: float, tail_bound: float) -> int:
    """Smallest y with P(Y > y) <= tail_bound for Y ~ Poisson(x_max)."""
    if x_max <= 0:
        return 1
    y = int(x_max)
    while stats.poisson.sf(y, x_max) > tail_bound:
        y += 1
    return max(y, 1)


class DMCChannel(Channel):
    """Finite channel; inputs are row indices."""

    family = "dmc"

    def __init__(self, matrix, input_set: InputSet | None = None):
        rows = [Dist(r).probs for r in np.asarray(matrix, dtype=np.float64)]
        self.matrix = np.stack(rows)
        self.matrix.setflags(write=False)
        k = self.matrix.shape[0]
        super().__init__(input_set or InputSet("finite_list", values=tuple(range(k))))
        for v in self.input_set.enumerate():
            if v != int(v) or not 0 <= v < k:
                raise ValueError("dmc input set must list row indices")

    @property
    def alphabet_size(self):
        return self.matrix.shape[1]

    def _row(self, x):
        return self.matrix[int(x)]

    def output_matrix(self, xs):
        return self.matrix[np.asarray(xs, dtype=np.int64)]

    def params_json(self):
        return {"matrix": self.matrix.tolist()}

    def encode_letter(self, x):
        return int(x)


class ArcChannel(Channel):
    """Uniform output on the wrapped arc [x, x + theta] mod 1; analytic only."""

    family = "arc"
    has_dist = False

    def __init__(self, theta: float, input_set: InputSet | None = None):
        if not 0 < theta < 1:
            raise ValueError("arc channel needs 0 < theta < 1")
        self.theta = float(theta)
        super().__init__(input_set or InputSet("interval", lo=0.0, hi=1.0))

    @property
    def alphabet_size(self):
        return 0

    def output_dist(self, x):
        raise ValueError("arc channel has continuous output; use arc_distance / arc_overlap")

    def params_json(self):
        return {"theta": self.theta}


class ProductChannel(Channel):
    """Letterwise product W1 x W2 acting on input pairs."""

    family = "product"

    def __init__(self, left: Channel, right: Channel):
        if not (left.has_dist and right.has_dist):
            raise ValueError("product channel needs two finite-output factors")
        self.left, self.right = left, right
        super().__init__(InputSet("product", left=left.input_set, right=right.input_set))

    @property
    def alphabet_size(self):
        return self.left.alphabet_size * self.right.alphabet_size

    def _row(self, x):
        a, b = x
        return np.kron(self.left._row(a), self.right._row(b))

    def output_matrix(self, xs):
        a = self.left.output_matrix([p[0] for p in xs])
        b = self.right.output_matrix([p[1] for p in xs])
        return (a[:, :, None] * b[:, None, :]).reshape(len(xs), -1)

    def to_json(self):
        return {"family": "product", "params": {},
                "left": self.left.to_json(), "right": self.right.to_json()}

    def encode_letter(self, x):
        return [self.left.encode_letter(x[0]), self.right.encode_letter(x[1])]

    def decode_letter(self, x):
        return (self.left.decode_letter(x[0]), self.right.decode_letter(x[1]))


def _numeric_bounds(s: InputSet):
    if s.kind == "interval":
        return [s.lo, s.hi]
    if s.kind == "finite_list":
        return [min(s.values), max(s.values)]
    if s.kind == "log_sequence":
        return [0.0, 1 / math.log(2)]
    if s.kind == "product":
        raise ValueError("scalar channel cannot take a product input set")
    return [0.0, 1.0]


def channel_from_json(spec: dict) -> Channel:
    fam = spec.get("family")
    params = spec.get("params", {}) or {}
    if fam == "product":
        return ProductChannel(channel_from_json(spec["left"]), channel_from_json(spec["right"]))
    iset = InputSet.from_json(spec["input_set"]) if spec.get("input_set") else None
    if fam == "bernoulli":
        return BernoulliChannel(iset)
    if fam == "poisson":
        return PoissonChannel(iset, tail_bound=params.get("tail_bound", 1e-12),
                              y_max=params.get("y_max"))
    if fam == "dmc":
        if "matrix" not in params:
            raise ValueError("dmc spec needs params.matrix")
        return DMCChannel(params["matrix"], iset)
    if fam == "arc":
        if "theta" not in params:
            raise ValueError("arc spec needs params.theta")
        return ArcChannel(params["theta"], iset)
    raise ValueError(f"unknown channel family {fam!r}")


def load_channel(path) -> Channel:
    with open(path) as fh:
        return channel_from_json(json.load(fh))


# ---------------------------------------------------------------- operations

def output_dist(ch: Channel, x) -> Dist:
    return ch.output_dist(x)


def sample_output(ch: Channel, x, seed: int) -> int:
    d = ch.output_dist(x)
    cdf = np.cumsum(d.probs)
    return inverse_cdf(cdf, uniform(derive_key(seed), 0))


def word_output(ch: Channel, w) -> SeqDist:
    if len(w) < 1:
        raise ValueError("input word must be nonempty")
    return SeqDist([ch.output_dist(x) for x in w])


def arc_distance(theta: float, x: float, x2: float) -> float:
    """Total variation between the arc outputs at x and x2."""
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    a = abs(float(x) - float(x2)) % 1.0
    delta = min(a, 1.0 - a)
    if delta <= min(theta, 1.0 - theta):
        return delta / theta
    if theta <= 0.5:
        return 1.0
    return 1.0 / theta - 1.0


def arc_overlap(theta: float, u, v) -> float:
    """prod_i (1 - d_A(u_i, v_i)): the support decoder's second-kind error."""
    if len(u) != len(v):
        raise ValueError(f"word length mismatch: {len(u)} vs {len(v)}")
    acc = 0.0
    for a, b in zip(u, v):
        f = 1.0 - arc_distance(theta, a, b)
        if f <= 0.0:
            return 0.0
        acc += math.log(f)
    return math.exp(acc)
