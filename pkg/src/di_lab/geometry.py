"""Coverings, packings and box-counting dimension of finite point clouds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import backend
from .channels import arc_distance

METRICS = ("euclidean", "euclidean_on_sphvec", "tv", "purified", "arc_dA",
           "product_sum_of_squares")
TOL = 1e-12
EXACT_LIMIT = 20


@dataclass
class PointCloud:
    """Finite metric space.

    points is an (N, d) array.  For tv / purified the rows are probability
    vectors, for euclidean_on_sphvec they are spherised distributions, for
    arc_dA they are scalars in [0, 1).  Product clouds keep their factors in
    `parts` and concatenate coordinates in `points`.
    """

    points: np.ndarray
    metric: str = "euclidean"
    theta: float | None = None
    parts: tuple = ()
    resolution: float | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        self.points = np.ascontiguousarray(p)
        if self.metric == "arc_dA" and not (self.theta and 0 < self.theta < 1):
            raise ValueError("arc_dA metric needs 0 < theta < 1")
        if self.metric == "product_sum_of_squares" and len(self.parts) != 2:
            raise ValueError("product metric needs two factor clouds")

    def __len__(self):
        return self.points.shape[0]

    # distances ---------------------------------------------------------
    def _split(self, idx):
        a, b = self.parts
        nb = len(b)
        idx = np.asarray(idx)
        return idx // nb, idx % nb

    def dist_to(self, i: int, idx) -> np.ndarray:
        """Distances from point i to the points listed in idx."""
        idx = np.asarray(idx, dtype=np.int64)
        m = self.metric
        if m == "product_sum_of_squares":
            a, b = self.parts
            ia, ib = self._split(i)
            ja, jb = self._split(idx)
            da = a.dist_to(int(ia), ja)
            db = b.dist_to(int(ib), jb)
            return np.sqrt(da * da + db * db)
        P = self.points
        if m in ("euclidean", "euclidean_on_sphvec"):
            d2 = np.zeros(len(idx))
            for k in range(P.shape[1]):
                diff = P[i, k] - P[idx, k]
                d2 = d2 + diff * diff
            return np.sqrt(d2)
        if m == "tv":
            return 0.5 * np.abs(P[idx] - P[i]).sum(axis=1)
        if m == "purified":
            f = np.minimum(np.sqrt(P[idx] * P[i]).sum(axis=1), 1.0)
            return np.sqrt(np.maximum(0.0, 1.0 - f * f))
        # arc
        return np.array([arc_distance(self.theta, P[i, 0], P[j, 0]) for j in idx])

    def distance(self, i: int, j: int) -> float:
        return float(self.dist_to(i, [j])[0])

    def distance_matrix(self) -> np.ndarray:
        n = len(self)
        return np.stack([self.dist_to(i, np.arange(n)) for i in range(n)])

    def euclidean_view(self):
        """Coordinates whose Euclidean distances equal the metric, or None."""
        m = self.metric
        if m in ("euclidean", "euclidean_on_sphvec"):
            return self.points
        if m == "tv" and self.points.shape[1] == 2:
            # binary distributions: TV is |p_1 - q_1|
            return np.ascontiguousarray(self.points[:, 1:2])
        if m == "product_sum_of_squares":
            a, b = self.parts
            va, vb = a.euclidean_view(), b.euclidean_view()
            if va is None or vb is None:
                return None
            return np.hstack([np.repeat(va, len(b), axis=0), np.tile(vb, (len(a), 1))])
        return None

    def scan_order(self) -> np.ndarray:
        """Ascending lexicographic order of coordinates, ties by index."""
        P = self.points
        return np.lexsort(tuple(P[:, k] for k in range(P.shape[1] - 1, -1, -1)))

    def diameter_bound(self) -> float:
        v = self.euclidean_view()
        if v is not None:
            return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
        return max(float(self.dist_to(0, np.arange(len(self))).max()) * 2, 0.0)


def line_cloud(values, resolution=None) -> PointCloud:
    return PointCloud(np.asarray(values, dtype=np.float64)[:, None], "euclidean",
                      resolution=resolution)


def dist_cloud(rows, metric="tv") -> PointCloud:
    rows = np.asarray(rows, dtype=np.float64)
    if metric == "euclidean_on_sphvec":
        return PointCloud(np.sqrt(rows), metric)
    return PointCloud(rows, metric)


def product_cloud(a: PointCloud, b: PointCloud) -> PointCloud:
    """Cartesian product with d = sqrt(d_a^2 + d_b^2)."""
    pts = np.hstack([np.repeat(a.points, len(b), axis=0), np.tile(b.points, (len(a), 1))])
    res = None
    if a.resolution is not None or b.resolution is not None:
        res = math.hypot(a.resolution or 0.0, b.resolution or 0.0)
    return PointCloud(pts, "product_sum_of_squares", parts=(a, b), resolution=res)


# ---------------------------------------------------------------- nets

@dataclass
class NetResult:
    kind: str
    radius: float
    center_indices: list
    count: int
    certificate: dict = field(default_factory=dict)

    def to_json(self):
        return {"kind": self.kind, "radius": self.radius,
                "center_indices": [int(i) for i in self.center_indices],
                "count": self.count, "certificate": self.certificate}


def _check_cloud(cloud: PointCloud, radius: float):
    if len(cloud) == 0:
        raise ValueError("empty cloud")
    if not radius > 0:
        raise ValueError("radius must be positive")


def _pack_positions(cloud: PointCloud, sep: float, order: np.ndarray) -> np.ndarray:
    sep_eff = max(sep - TOL, 0.0)
    view = cloud.euclidean_view()
    if view is not None:
        pts = np.ascontiguousarray(view[order])
        cell = sep * (1 + 1e-9) if pts.shape[1] <= 3 else 0.0
        pos = backend.kernels.greedy_pack(pts, sep_eff * sep_eff, cell)
        return order[pos]
    kept = []
    for i in order:
        if kept and np.any(cloud.dist_to(int(i), kept) < sep_eff):
            continue
        kept.append(int(i))
    return np.array(kept, dtype=np.int64)


def _nearest_center_dist(cloud: PointCloud, centers: np.ndarray) -> np.ndarray:
    view = cloud.euclidean_view()
    if view is not None:
        tree = cKDTree(view[centers])
        d, _ = tree.query(view, k=1)
        return d
    best = np.full(len(cloud), np.inf)
    for c in centers:
        best = np.minimum(best, cloud.dist_to(int(c), np.arange(len(cloud))))
    return best


def _min_center_separation(cloud: PointCloud, centers: np.ndarray) -> float:
    if len(centers) < 2:
        return math.inf
    view = cloud.euclidean_view()
    if view is not None:
        tree = cKDTree(view[centers])
        d, _ = tree.query(view[centers], k=2)
        return float(d[:, 1].min())
    best = math.inf
    for j, c in enumerate(centers[:-1]):
        best = min(best, float(cloud.dist_to(int(c), centers[j + 1:]).min()))
    return best


def verify_packing(cloud: PointCloud, net: NetResult) -> bool:
    c = np.asarray(net.center_indices, dtype=np.int64)
    return _min_center_separation(cloud, c) >= 2 * net.radius - 2 * TOL


def verify_maximal(cloud: PointCloud, net: NetResult) -> bool:
    """No cloud point could be added to the packing."""
    c = np.asarray(net.center_indices, dtype=np.int64)
    return bool(np.all(_nearest_center_dist(cloud, c) < 2 * net.radius + TOL))


def verify_covering(cloud: PointCloud, net: NetResult) -> bool:
    c = np.asarray(net.center_indices, dtype=np.int64)
    return bool(np.all(_nearest_center_dist(cloud, c) <= net.radius + TOL))


def greedy_packing(cloud: PointCloud, radius: float, verify=True) -> NetResult:
    """Maximal packing: centres pairwise >= 2*radius, scanned in lexicographic order."""
    _check_cloud(cloud, radius)
    centers = _pack_positions(cloud, 2 * radius, cloud.scan_order())
    net = NetResult("packing", float(radius), centers.tolist(), int(len(centers)))
    if verify:
        ok = verify_packing(cloud, net) and verify_maximal(cloud, net)
        if not ok:
            raise RuntimeError("packing failed its certificate")
        net.certificate = {"separation_checked": True, "maximal_checked": True}
    return net


def _sweep_cover_1d(view: np.ndarray, radius: float) -> np.ndarray:
    """Optimal covering of points on a line by closed balls centred at points."""
    x = view[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    r = radius + TOL
    centers = []
    i, m = 0, len(xs)
    while i < m:
        # farthest point still within r of the leftmost uncovered one
        j = int(np.searchsorted(xs, xs[i] + r, side="right")) - 1
        centers.append(int(order[j]))
        i = int(np.searchsorted(xs, xs[j] + r, side="right"))
    return np.array(centers, dtype=np.int64)


def _product_cover(cloud: PointCloud, radius: float, splits=16) -> np.ndarray:
    """Best product of factor covers at radii (r cos phi, r sin phi)."""
    a, b = cloud.parts
    best = None
    for phi in np.linspace(0, np.pi / 2, splits + 2)[1:-1]:
        ca = greedy_covering(a, radius * math.cos(phi)).center_indices
        cb = greedy_covering(b, radius * math.sin(phi)).center_indices
        if best is None or len(ca) * len(cb) < len(best[0]) * len(best[1]):
            best = (ca, cb)
    ca, cb = best
    nb = len(b)
    return np.array([i * nb + j for i in ca for j in cb], dtype=np.int64)


def greedy_covering(cloud: PointCloud, radius: float) -> NetResult:
    """Covering by closed balls centred at cloud points.

    On a line the left-to-right sweep is optimal.  Elsewhere the maximal
    packing at radius/2 is returned: it covers at `radius` by maximality.
    Either way the count is certified <= the greedy packing count at radius/2.
    """
    _check_cloud(cloud, radius)
    view = cloud.euclidean_view()
    half = _pack_positions(cloud, radius, cloud.scan_order())
    if view is not None and view.shape[1] == 1:
        centers = _sweep_cover_1d(view, radius)
        method = "line_sweep"
    else:
        centers = half
        method = "half_radius_packing"
        if cloud.metric == "product_sum_of_squares":
            prod = _product_cover(cloud, radius)
            if len(prod) < len(centers):
                centers, method = prod, "product_of_factor_covers"
    net = NetResult("covering", float(radius), centers.tolist(), int(len(centers)))
    if not verify_covering(cloud, net):
        raise RuntimeError("covering failed its certificate")
    if net.count > len(half):
        raise RuntimeError("covering larger than the half-radius packing")
    net.certificate = {"method": method, "covering_checked": True,
                       "half_radius_packing_count": int(len(half))}
    return net


# ---------------------------------------------------------------- exact counts

def _adjacency(cloud: PointCloud, thresh: float, strict: bool) -> list:
    n = len(cloud)
    D = cloud.distance_matrix()
    masks = []
    for i in range(n):
        row = D[i] < thresh if strict else D[i] <= thresh
        masks.append(sum(1 << j for j in range(n) if row[j]))
    return masks


def exact_packing_number(cloud: PointCloud, radius: float) -> int:
    """Maximum number of cloud points pairwise >= 2*radius apart (<= 20 points)."""
    n = len(cloud)
    if n > EXACT_LIMIT:
        raise ValueError(f"exact packing limited to {EXACT_LIMIT} points")
    conflict = _adjacency(cloud, 2 * radius - TOL, strict=True)
    best = 0

    def grow(avail, size):
        nonlocal best
        if avail == 0:
            best = max(best, size)
            return
        if size + bin(avail).count("1") <= best:
            return
        i = (avail & -avail).bit_length() - 1
        grow(avail & ~conflict[i], size + 1)     # take i
        grow(avail & ~(1 << i), size)             # skip i

    grow((1 << n) - 1, 0)
    return best


def exact_covering_number(cloud: PointCloud, radius: float) -> int:
    """Minimum number of closed balls centred at cloud points (<= 20 points)."""
    n = len(cloud)
    if n > EXACT_LIMIT:
        raise ValueError(f"exact covering limited to {EXACT_LIMIT} points")
    cover = _adjacency(cloud, radius + TOL, strict=False)
    full = (1 << n) - 1
    for k in range(1, n + 1):
        for combo in itertools.combinations(range(n), k):
            m = 0
            for c in combo:
                m |= cover[c]
            if m == full:
                return k
    return n


@dataclass
class SandwichResult:
    ok: bool
    pack_outer: int
    cover: int
    pack_inner: int
    exact: bool
    delta: float
    eta: float
    note: str = ""

    def __bool__(self):
        return self.ok


def sandwich_check(cloud: PointCloud, delta: float, eta: float | None = None) -> SandwichResult:
    """Pi_{delta+eta} <= Gamma_delta <= Pi_{delta/2}."""
    if eta is None:
        eta = delta / 100
    if not (delta > 0 and eta > 0):
        raise ValueError("delta and eta must be positive")
    if len(cloud) <= EXACT_LIMIT:
        a = exact_packing_number(cloud, delta + eta)
        g = exact_covering_number(cloud, delta)
        b = exact_packing_number(cloud, delta / 2)
        return SandwichResult(a <= g <= b, a, g, b, True, delta, eta)
    a = greedy_packing(cloud, delta + eta).count
    g = greedy_covering(cloud, delta).count
    b = greedy_packing(cloud, delta / 2).count
    return SandwichResult(a <= g <= b, a, g, b, False, delta, eta,
                          note="greedy counts: left side is a lower bound on Pi, "
                               "right side is a maximal but not maximum packing")


# ---------------------------------------------------------------- dimension

@dataclass
class DimensionEstimate:
    deltas: list
    counts: list
    slope: float
    intercept: float
    residual: float
    window_slopes: list
    lower_slope: float
    upper_slope: float
    raw_counts: list
    packing_lower: list

    def to_json(self):
        return {k: getattr(self, k) for k in (
            "deltas", "counts", "slope", "intercept", "residual", "window_slopes",
            "lower_slope", "upper_slope", "raw_counts", "packing_lower")}


def ols_slope(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def estimate_dimension(cloud_family, deltas: Sequence[float], with_packing=True) -> DimensionEstimate:
    """Box-counting slope of log2 Gamma_delta against -log2 delta.

    cloud_family is a PointCloud or a callable delta -> PointCloud.  A cloud
    carrying a `resolution` coarser than delta/4 is rejected.  Counts are made
    monotone by taking, at each scale, the smallest count seen at that or any
    finer scale (a cover at a finer scale is also a cover at a coarser one).
    """
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if len(deltas) < 4:
        raise ValueError("need at least 4 deltas")
    if len(set(deltas)) != len(deltas) or deltas[-1] <= 0:
        raise ValueError("deltas must be distinct and positive")
    if deltas[0] / deltas[-1] < 100 * (1 - 1e-9):
        raise ValueError("deltas must span at least two decades")
    raw, lower = [], []
    for d in deltas:
        cloud = cloud_family(d) if callable(cloud_family) else cloud_family
        if cloud.resolution is not None and cloud.resolution > d / 4 * (1 + 1e-9):
            raise ValueError(f"cloud resolution {cloud.resolution} cannot resolve delta={d}")
        raw.append(greedy_covering(cloud, d).count)
        lower.append(greedy_packing(cloud, d * 1.01, verify=False).count if with_packing else None)
    counts = list(raw)
    for i in range(len(counts) - 2, -1, -1):
        counts[i] = min(counts[i], counts[i + 1])
    x = -np.log2(deltas)
    y = np.log2(counts)
    slope, icpt, res = ols_slope(x, y)
    wins = [ols_slope(x[i:i + 3], y[i:i + 3])[0] for i in range(len(x) - 2)]
    return DimensionEstimate(deltas, counts, slope, icpt, res, wins, min(wins), max(wins),
                             raw, lower)


# ---------------------------------------------------------------- cloud families

def interval_family(lo=0.0, hi=1.0) -> Callable[[float], PointCloud]:
    def make(delta):
        h = delta / 4
        m = int(math.ceil((hi - lo) / h))
        return line_cloud(np.linspace(lo, hi, m + 1), resolution=(hi - lo) / m)
    return make


def grid_family(dim: int) -> Callable[[float], PointCloud]:
    """[0,1]^dim sampled at spacing <= delta/4."""
    def make(delta):
        m = int(math.ceil(4 / delta))
        axis = np.linspace(0.0, 1.0, m + 1)
        mesh = np.meshgrid(*[axis] * dim, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        return PointCloud(pts, "euclidean", resolution=1.0 / m)
    return make


def sequence_family(kind: str, s=1.0, c=2.0) -> Callable[[float], PointCloud]:
    """{0} and the sequence terms down to delta/4; the tail lies within delta/4 of 0."""
    from .channels import InputSet, enumerate_input_set

    iset = InputSet(kind, s=s, c=c)

    def make(delta):
        vals = enumerate_input_set(iset, delta / 4)
        vals = [v for v in vals if v == 0.0 or v >= delta / 4]
        return line_cloud(vals, resolution=delta / 4)
    return make
