"""Chemical distance, geodesics, closest-vertex projection and time constants."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _hash
from ._kernels import bfs
from .percolation import (ClusterLabeling, Configuration, GridSpec,
                          sample_configuration, uniq_report)

Point = tuple[int, int]


def _index(config: Configuration, x: Sequence[int]) -> tuple[int, int]:
    n = config.n
    i, j = int(x[0]) + n, int(x[1]) + n
    if not (0 <= i <= 2 * n and 0 <= j <= 2 * n):
        raise ValueError(f"{tuple(x)} is not a vertex of B({n})")
    return i, j


@dataclass(frozen=True, eq=False)
class DistanceField:
    n: int
    source: Point
    dist: np.ndarray  # shape (2n+1, 2n+1), -1 where unreachable

    def at(self, x: Sequence[int]) -> float:
        d = int(self.dist[int(x[0]) + self.n, int(x[1]) + self.n])
        return math.inf if d < 0 else d


def distance_field(config: Configuration, source: Sequence[int]) -> DistanceField:
    i, j = _index(config, source)
    dist, _ = bfs(config.horizontal, config.vertical, i, j, -1, -1)
    L = 2 * config.n + 1
    return DistanceField(config.n, (int(source[0]), int(source[1])), dist.reshape(L, L))


def _search(config: Configuration, x, y):
    si, sj = _index(config, x)
    ti, tj = _index(config, y)
    dist, parent = bfs(config.horizontal, config.vertical, si, sj, ti, tj)
    return dist, parent, ti * (2 * config.n + 1) + tj


def chemical_distance(config: Configuration, x: Sequence[int], y: Sequence[int]) -> float:
    """Fewest open edges joining x and y inside B(n); inf when disconnected."""
    dist, _, t = _search(config, x, y)
    return math.inf if dist[t] < 0 else int(dist[t])


def geodesic(config: Configuration, x: Sequence[int], y: Sequence[int]) -> list[Point] | None:
    """A shortest open path from x to y (neighbour order E, N, W, S)."""
    dist, parent, t = _search(config, x, y)
    if dist[t] < 0:
        return None
    L = 2 * config.n + 1
    n = config.n
    out = []
    u = t
    while u >= 0:
        out.append((int(u // L) - n, int(u % L) - n))
        u = parent[u]
    out.reverse()
    return out


# ---------------------------------------------------------------- closest vertex

def eta_marks(n: int, seed: int) -> np.ndarray:
    xs = np.arange(-n, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    key = _hash.stream_key(seed, 0, _hash.TAG_ETA)
    return _hash.uniforms(key, _hash.point_keys(gx, gy))


@dataclass(frozen=True, eq=False)
class ClosestVertexIndex:
    n: int
    giant: np.ndarray  # bool (2n+1, 2n+1)
    eta: np.ndarray    # float (2n+1, 2n+1)

    @classmethod
    def build(cls, config: Configuration, labeling: ClusterLabeling, giant_label: int) -> "ClosestVertexIndex":
        return cls(config.n, labeling.labels == giant_label, eta_marks(config.n, config.spec.master_seed))


def closest_vertex(index: ClosestVertexIndex, x: Sequence[float]) -> Point:
    """The l-inf nearest giant vertex to the real point x, ties by smallest eta."""
    n = index.n
    if not index.giant.any():
        raise ValueError("giant cluster is empty")
    px, py = float(x[0]), float(x[1])
    cx = min(max(int(round(px)), -n), n)
    cy = min(max(int(round(py)), -n), n)
    k = 0
    while True:
        i0, i1 = max(cx - k - 1, -n), min(cx + k + 1, n)
        j0, j1 = max(cy - k - 1, -n), min(cy + k + 1, n)
        window = index.giant[i0 + n:i1 + n + 1, j0 + n:j1 + n + 1]
        if window.any():
            gx, gy = np.nonzero(window)
            gx = gx + i0
            gy = gy + j0
            d = np.maximum(np.abs(gx - px), np.abs(gy - py))
            dmin = d.min()
            # every lattice point outside the window is strictly farther than dmin
            outside = min(px - (i0 - 1) if i0 > -n else math.inf,
                          (i1 + 1) - px if i1 < n else math.inf,
                          py - (j0 - 1) if j0 > -n else math.inf,
                          (j1 + 1) - py if j1 < n else math.inf)
            if dmin < outside:
                best = np.flatnonzero(d == dmin)
                etas = index.eta[gx[best] + n, gy[best] + n]
                b = best[int(np.argmin(etas))]
                return int(gx[b]), int(gy[b])
        if i0 == -n and i1 == n and j0 == -n and j1 == n:
            raise ValueError("giant cluster is empty")
        k = 2 * k + 1


# ---------------------------------------------------------------- time constant

@dataclass(frozen=True)
class LengthRecord:
    L: int
    samples: int
    mean_D: float
    stderr: float
    dropped: int
    truncated: int
    distances: tuple[int, ...] = field(repr=False, default=())


@dataclass(frozen=True)
class TimeConstantEstimate:
    p: float
    direction: tuple[float, float]
    mu_hat: float
    stderr: float
    lengths: tuple[int, ...]
    samples_per_length: int
    records: tuple[LengthRecord, ...]

    def ci95(self) -> tuple[float, float]:
        return self.mu_hat - 1.96 * self.stderr, self.mu_hat + 1.96 * self.stderr

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "dir_x", "dir_y", "L", "samples", "mean_D", "stderr", "dropped"])
            for r in self.records:
                w.writerow([self.p, self.direction[0], self.direction[1], r.L, r.samples,
                            repr(r.mean_D), repr(r.stderr), r.dropped])


def slope_fit(x: np.ndarray, y: np.ndarray, se: np.ndarray) -> tuple[float, float]:
    """Least-squares slope (free intercept) and its propagated standard error."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    dx = x - x.mean()
    sxx = float(np.dot(dx, dx))
    slope = float(np.dot(dx, y - y.mean())) / sxx
    c = dx / sxx
    return slope, float(math.sqrt(np.dot(c * c, np.asarray(se, float) ** 2)))


def time_constant_box(direction: Sequence[float], L: int, margin: float = 0.25):
    """Half-side and centre of a box holding o and L*direction with the given margin."""
    bx, by = L * float(direction[0]), L * float(direction[1])
    ext = max(abs(bx), abs(by))
    half = int(math.ceil(ext / 2 + margin * ext)) + 1
    return half, (int(round(bx / 2)), int(round(by / 2)))


def measure_distance(config: Configuration, a: Sequence[float], b: Sequence[float],
                     kappa: float | None = None):
    """D([a],[b]) in one configuration, or None when the uniqueness event fails.

    Returns (D, [a], [b], touches_boundary).
    """
    labeling, report = uniq_report(config, kappa)
    if not report.uniq_event_holds:
        return None
    index = ClosestVertexIndex.build(config, labeling, report.giant_label)
    ca = closest_vertex(index, a)
    cb = closest_vertex(index, b)
    path = geodesic(config, ca, cb)
    n = config.n
    touches = any(max(abs(x), abs(y)) == n for x, y in path)
    return len(path) - 1, ca, cb, touches


def estimate_time_constant(p: float, direction: Sequence[float], lengths: Sequence[int],
                           samples_per_length: int, seed: int = 0, kappa: float | None = None,
                           margin: float = 0.25) -> TimeConstantEstimate:
    """Directional time constant per unit l1 length.

    For each L, D([o],[L*dir]) is sampled on boxes centred on the segment
    midpoint; samples outside the uniqueness event are dropped.  ``mu_hat`` is
    the slope of the mean distance against the l1 length L*|dir|_1.
    """
    dx, dy = float(direction[0]), float(direction[1])
    if dx == 0 and dy == 0:
        raise ValueError("direction must be nonzero")
    lengths = [int(L) for L in lengths]
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("lengths must be increasing")
    if len(lengths) < 2:
        raise ValueError("need at least two lengths")
    l1 = abs(dx) + abs(dy)
    records = []
    for L in lengths:
        half, (cx, cy) = time_constant_box((dx, dy), L, margin)
        spec = GridSpec(half, p, _hash.derive_seed(seed, L, int(round(dx * 1e6)), int(round(dy * 1e6))))
        a = (-cx, -cy)
        b = (L * dx - cx, L * dy - cy)
        ds: list[int] = []
        dropped = truncated = 0
        for k in range(samples_per_length):
            got = measure_distance(sample_configuration(spec, k), a, b, kappa)
            if got is None:
                dropped += 1
                continue
            d, ca, cb, touches = got
            # chemical distance dominates the l1 distance, sample by sample
            if d < abs(ca[0] - cb[0]) + abs(ca[1] - cb[1]):
                raise AssertionError("chemical distance below l1 distance")
            ds.append(d)
            truncated += touches
        if not ds:
            raise ValueError(f"all samples disconnected at L={L}")
        arr = np.array(ds, float)
        se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        records.append(LengthRecord(L, arr.size, float(arr.mean()), se, dropped, truncated, tuple(ds)))
    xs = np.array([r.L * l1 for r in records])
    slope, se = slope_fit(xs, np.array([r.mean_D for r in records]), np.array([r.stderr for r in records]))
    return TimeConstantEstimate(p, (dx, dy), slope, se, tuple(lengths), samples_per_length, tuple(records))


# ---------------------------------------------------------------- epsilon-optimal paths

@dataclass(frozen=True)
class EpsilonPath:
    path: list[Point]
    hausdorff: float
    length: int
    bound: float
    pieces: int


def epsilon_optimal_path(config: Configuration, x: Sequence[float], y: Sequence[float], eps: float,
                         norm: Callable[[Sequence[float]], float], *, kappa: float | None = None,
                         labeling: ClusterLabeling | None = None, a_max: float | None = None,
                         pieces: int | None = None) -> EpsilonPath | None:
    """Open path near the segment [x, y] built from geodesics between projections.

    The segment is cut into M pieces with M = ceil(16 A / (eps eps')), where A
    bounds the norm on the l1 unit sphere and eps' = |y - x|_1 / n.  Returns
    None when the concatenated path is longer than (1 + eps) norm(y - x).
    """
    from .geometry import PolyCurve, concatenate, hausdorff, segment_samples

    if eps <= 0:
        raise ValueError("eps must be positive")
    labeling, report = uniq_report(config, kappa, labeling)
    if report.giant_label is None or not report.uniq_event_holds:
        raise ValueError("no giant cluster: uniqueness event fails")
    index = ClosestVertexIndex.build(config, labeling, report.giant_label)
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    disp = (y[0] - x[0], y[1] - x[1])
    l1 = abs(disp[0]) + abs(disp[1])
    if l1 == 0:
        v = closest_vertex(index, x)
        return EpsilonPath([v], max(abs(v[0] - x[0]), abs(v[1] - x[1])), 0, 0.0, 0)
    if pieces is None:
        if a_max is None:
            a_max = norm_max_on_l1_sphere(norm)
        pieces = math.ceil(16.0 * a_max / (eps * (l1 / config.n)))
    waypoints = []
    for k in range(pieces + 1):
        v = closest_vertex(index, (x[0] + disp[0] * k / pieces, x[1] + disp[1] * k / pieces))
        if not waypoints or waypoints[-1] != v:
            waypoints.append(v)
    path = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        path = concatenate(path, geodesic(config, a, b))
    length = len(path) - 1
    bound = (1.0 + eps) * norm(disp)
    if length > bound:
        return None
    d_h = hausdorff(PolyCurve(np.array(path, float)), segment_samples(x, y))
    return EpsilonPath(path, d_h, length, bound, pieces)


def norm_max_on_l1_sphere(norm: Callable[[Sequence[float]], float], samples: int = 720) -> float:
    if hasattr(norm, "max_on_l1_sphere"):
        return norm.max_on_l1_sphere()
    t = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    best = 0.0
    for c, s in zip(np.cos(t), np.sin(t)):
        m = abs(c) + abs(s)
        best = max(best, norm((c / m, s / m)))
    return best
