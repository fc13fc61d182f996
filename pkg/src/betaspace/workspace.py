"""Planar workspace estimates from sampled tip positions.

Rotationally symmetric clouds are collapsed onto the ``(r, z)`` half plane, a
boundary polygon is fitted with an alpha shape, and area, convergence over
sample count and pairwise-distance statistics are reported.

Boundary rule: the alpha shape keeps every Delaunay triangle whose circumradius
is at most a radius ``rho``.  The critical radius is the smallest ``rho`` whose
kept triangles touch every point and whose boundary is one simple closed loop
(so one region, no holes, no pinch vertices).  ``concavity`` in ``(0, 1]``
scales the radius as ``rho = critical / concavity``; ``concavity = 0`` keeps all
triangles, giving the convex hull.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError

from . import _backend, rng
from .errors import DegenerateCloud, SelfIntersecting


def lantern_project(points3d) -> np.ndarray:
    """``(x, y, z) -> (sqrt(x^2 + y^2), z)`` for an ``(S, 3)`` array."""
    p = np.atleast_2d(np.asarray(points3d, dtype=float))
    return np.stack([np.hypot(p[:, 0], p[:, 1]), p[:, 2]], axis=1)


# --------------------------------------------------------------------- polygons

def _shoelace(polygon: np.ndarray) -> float:
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def is_simple(polygon) -> bool:
    """True when no two non-adjacent edges of the closed polygon intersect."""
    p = np.asarray(polygon, dtype=float)
    n = len(p)
    if n < 3:
        return False
    a, b = p, np.roll(p, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))  # first and last edges share a vertex
    i, j = i[keep], j[keep]
    for lo in range(0, len(i), 1 << 20):
        ii, jj = i[lo:lo + (1 << 20)], j[lo:lo + (1 << 20)]
        d1 = _orient(a[jj], b[jj], a[ii])
        d2 = _orient(a[jj], b[jj], b[ii])
        d3 = _orient(a[ii], b[ii], a[jj])
        d4 = _orient(a[ii], b[ii], b[jj])
        if np.any((d1 * d2 <= 0) & (d3 * d4 <= 0)):
            return False
    return True


def polygon_area(polygon, check_simple: bool = True) -> float:
    """Absolute shoelace area of a closed polygon given as ``(V, 2)`` vertices."""
    p = np.asarray(polygon, dtype=float)
    if check_simple and not is_simple(p):
        raise SelfIntersecting("polygon edges cross")
    return abs(_shoelace(p))


# --------------------------------------------------------------------- boundary

@dataclass(frozen=True, eq=False)
class BoundaryEstimate:
    polygon: np.ndarray  # (V, 2), counter-clockwise, not repeated at the end
    area: float
    concavity: float
    radius: float  # alpha radius used; inf for the convex hull


class _Triangulation:
    def __init__(self, pts: np.ndarray):
        self.pts = pts
        tri = Delaunay(pts)
        self.simplices = tri.simplices
        self.neighbors = tri.neighbors
        a, b, c = (self.pts[self.simplices[:, k]] for k in range(3))
        self.tri_area = 0.5 * np.abs(_orient(a, b, c))
        la = np.linalg.norm(b - c, axis=1)
        lb = np.linalg.norm(a - c, axis=1)
        lc = np.linalg.norm(a - b, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            R = la * lb * lc / (4.0 * self.tri_area)
        self.radius = np.where(self.tri_area > 0, R, np.inf)
        self.vertices = np.unique(self.simplices)
        # edge opposite vertex k of each triangle
        self.edges = np.stack([self.simplices[:, [1, 2]], self.simplices[:, [2, 0]], self.simplices[:, [0, 1]]], 1)

    def coverage_radius(self) -> float:
        best = np.full(len(self.pts), np.inf)
        for k in range(3):
            np.minimum.at(best, self.simplices[:, k], self.radius)
        return float(best[self.vertices].max())

    def boundary_edges(self, keep: np.ndarray) -> np.ndarray:
        nb = self.neighbors
        outside = (nb < 0) | ~keep[np.where(nb < 0, 0, nb)]
        sel = keep[:, None] & outside
        return self.edges[sel]

    def is_single_loop(self, keep: np.ndarray) -> bool:
        if not keep.any():
            return False
        touched = np.zeros(len(self.pts), dtype=bool)
        touched[self.simplices[keep].ravel()] = True
        if not touched[self.vertices].all():
            return False
        e = self.boundary_edges(keep)
        deg = np.bincount(e.ravel(), minlength=len(self.pts))
        verts = np.flatnonzero(deg)
        if np.any(deg[verts] != 2):
            return False
        g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(len(self.pts),) * 2)
        n_comp, labels = connected_components(g, directed=False)
        return len(np.unique(labels[verts])) == 1

    def loop(self, keep: np.ndarray) -> np.ndarray:
        e = self.boundary_edges(keep)  # oriented counter-clockwise around kept triangles
        nxt = dict(zip(e[:, 0].tolist(), e[:, 1].tolist()))
        start = int(e[0, 0])
        order = [start]
        v = nxt[start]
        while v != start:
            order.append(v)
            v = nxt[v]
        return self.pts[order]


def _unique_points(cloud) -> np.ndarray:
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("cloud must have shape (S, 2)")
    return np.unique(pts[np.isfinite(pts).all(axis=1)], axis=0)


def _critical_index(t: _Triangulation, radii: np.ndarray) -> int:
    """Index into sorted ``radii`` of the smallest radius giving one simple loop.

    Starts at the coverage radius, gallops upward, then bisects.  Validity is
    not strictly monotone in the radius, so this is the smallest valid radius
    along the search path.
    """
    ok = lambda idx: t.is_single_loop(t.radius <= radii[idx])  # noqa: E731
    lo = int(np.searchsorted(radii, t.coverage_radius()))
    last = len(radii) - 1
    if ok(lo):
        return lo
    step, bad = 1, lo
    while True:
        hi = min(bad + step, last)
        if ok(hi):
            break
        if hi == last:
            return last
        bad, step = hi, step * 2
    while hi - bad > 1:
        mid = (bad + hi) // 2
        if ok(mid):
            hi = mid
        else:
            bad = mid
    return hi


def _boundary_from(t: _Triangulation, concavity: float) -> BoundaryEstimate:
    finite = t.radius[np.isfinite(t.radius)]
    radii = np.append(np.unique(finite), np.inf)
    if concavity == 0.0:
        idx = len(radii) - 1
    else:
        idx = _critical_index(t, radii)
        if concavity < 1.0:
            target = radii[idx] / concavity
            idx = int(np.searchsorted(radii, target, side="right")) - 1
            while idx < len(radii) - 1 and not t.is_single_loop(t.radius <= radii[idx]):
                idx += 1
    keep = t.radius <= radii[idx]
    if not t.is_single_loop(keep):  # convex hull triangulation, includes zero-area slivers
        keep = np.ones(len(t.radius), dtype=bool)
    polygon = t.loop(keep)
    return BoundaryEstimate(polygon, abs(_shoelace(polygon)), concavity, float(radii[idx]))


def _check_concavity(concavity: float) -> None:
    if not 0.0 <= concavity <= 1.0:
        raise ValueError("concavity must lie in [0, 1]")


def _empty(concavity: float) -> BoundaryEstimate:
    return BoundaryEstimate(np.empty((0, 2)), 0.0, concavity, math.nan)


def concave_boundary(cloud, concavity: float = 1.0, strict: bool = True) -> BoundaryEstimate:
    """Alpha-shape boundary of a planar cloud.

    With ``strict=False`` degenerate input (fewer than three distinct points or
    all collinear) yields an empty polygon with area 0 instead of raising.
    """
    _check_concavity(concavity)
    pts = _unique_points(cloud)
    try:
        if len(pts) < 3:
            raise DegenerateCloud(f"need three distinct points, got {len(pts)}")
        try:
            t = _Triangulation(pts)
        except QhullError as exc:
            raise DegenerateCloud("points are collinear") from exc
        if not np.any(t.tri_area > 0):
            raise DegenerateCloud("points are collinear")
    except DegenerateCloud:
        if strict:
            raise
        return _empty(concavity)
    return _boundary_from(t, concavity)


def convex_hull_area(cloud) -> float:
    return concave_boundary(cloud, concavity=0.0).area


# ------------------------------------------------------------------ convergence

@dataclass(frozen=True, eq=False)
class ConvergenceCurve:
    """Boundary areas of growing prefixes of permuted clouds.

    ``areas`` has shape ``(permutations, len(counts))`` and is relative to the
    area of the full cloud (1.0 = final area; values above 1 are possible).
    """

    counts: np.ndarray
    areas: np.ndarray
    final_area: float

    @property
    def median(self) -> np.ndarray:
        return np.median(self.areas, axis=0)

    @property
    def min(self) -> np.ndarray:
        return self.areas.min(axis=0)

    @property
    def max(self) -> np.ndarray:
        return self.areas.max(axis=0)


def default_counts(total: int, points: int = 25, first: int = 10, fine: int = 25) -> np.ndarray:
    """Geometric grid from ``first`` to ``total`` plus ``fine`` even steps over the upper half.

    The upper half is where a curve crosses 99 %, so it gets the resolution.
    """
    if total <= first:
        return np.arange(3, total + 1) if total >= 3 else np.array([total])
    coarse = np.geomspace(first, total, points)
    upper = np.linspace(total / 2, total, fine + 1)
    return np.unique(np.concatenate([coarse, upper]).round().astype(int))


def permutation(count: int, seed: int, index: int) -> np.ndarray:
    keys = rng.uniform_block(rng.derive_seed(seed, 1000 + index), 0, count, 1)[0]
    return np.argsort(keys, kind="stable")


def convergence_curve(cloud, permutations: int = 10, counts=None, seed: int = 0,
                      concavity: float = 1.0) -> ConvergenceCurve:
    pts = np.asarray(cloud, dtype=float)
    total = len(pts)
    counts = default_counts(total) if counts is None else np.asarray(counts, dtype=int)
    if len(counts) and counts.max() > total:
        raise ValueError(f"largest count {counts.max()} exceeds cloud size {total}")
    _check_concavity(concavity)
    final = concave_boundary(pts, concavity, strict=False).area
    areas = np.zeros((permutations, len(counts)))
    for p in range(permutations):
        shuffled = pts[permutation(total, seed, p)]
        for c, n in enumerate(counts):
            areas[p, c] = concave_boundary(shuffled[:n], concavity, strict=False).area
    rel = areas / final if final > 0 else np.zeros_like(areas)
    return ConvergenceCurve(counts, rel, final)


def samples_to_fraction(curve: ConvergenceCurve, level: float = 0.99) -> float:
    """Median over permutations of the first count whose area reaches ``level``."""
    first = []
    for row in curve.areas:
        hit = np.flatnonzero(row >= level)
        first.append(curve.counts[hit[0]] if hit.size else math.inf)
    return float(np.median(first))


# -------------------------------------------------------------------- closeness

@dataclass(frozen=True)
class ClosenessStats:
    mean: float
    std: float
    median: float  # median of per-block-pair medians
    block: int
    pairs: int


def closeness_stats(cloud, block: int = 1000, backend: str | None = None) -> ClosenessStats:
    """Pairwise Euclidean distance statistics without materialising all pairs.

    Points are split into consecutive blocks of ``block``; mean and standard
    deviation are exact over all ``S (S - 1) / 2`` pairs, the median is the
    median over block pairs of each block pair's median distance.
    """
    pts = np.ascontiguousarray(cloud, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    kernels = _backend.get(backend)
    chunks = [pts[i:i + block] for i in range(0, len(pts), block)]
    count, total, total_sq = 0, 0.0, 0.0
    medians = []
    for a in range(len(chunks)):
        for b in range(a, len(chunks)):
            same = a == b
            if same and len(chunks[a]) < 2:
                continue
            n, s, s2 = kernels.pair_moments(chunks[a], chunks[b], same)
            count, total, total_sq = count + n, total + s, total_sq + s2
            d = np.sqrt(((chunks[a][:, None, :] - chunks[b][None, :, :]) ** 2).sum(-1))
            medians.append(np.median(d[np.triu_indices(len(d), 1)] if same else d))
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return ClosenessStats(mean, math.sqrt(var), float(np.median(medians)), block, count)


def annulus_chi_square(points, radius: float = 1.0, bins: int = 10):
    """Chi-square test of uniformity over ``bins`` equal-area annuli; returns ``(stat, p)``."""
    r = np.hypot(*np.asarray(points, dtype=float).T)
    edges = radius * np.sqrt(np.linspace(0.0, 1.0, bins + 1))
    edges[-1] = np.inf
    observed, _ = np.histogram(r, bins=edges)
    res = sps.chisquare(observed)
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------- exports

def write_cloud_csv(cloud, path) -> None:
    _write_rows(path, ["r", "z"], np.asarray(cloud))


def write_polygon_csv(boundary: BoundaryEstimate, path) -> None:
    _write_rows(path, ["r", "z"], boundary.polygon)


def write_curve_csv(curve: ConvergenceCurve, path) -> None:
    rows = np.column_stack([curve.counts, curve.median, curve.min, curve.max])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["count", "median", "min", "max"])
        for c, *vals in rows:
            w.writerow([int(c)] + [repr(float(v)) for v in vals])


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows([[repr(float(v)) for v in row] for row in rows])


def write_json(record: dict, path) -> None:
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
