"""Polyhedral norm models, dual norms, Wulff shapes and isoperimetric constants."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import PolyCurve


def _d4_images(u: np.ndarray) -> np.ndarray:
    x, y = u
    return np.array([(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)], float)


def _hull(points: np.ndarray) -> np.ndarray:
    """Convex hull, counterclockwise, (near-)collinear points dropped (monotone chain)."""
    pts = sorted(set(map(tuple, np.round(points, 15))))
    if len(pts) < 3:
        raise ValueError("degenerate point set")
    # rounding noise must not turn a collinear point into a spurious vertex
    tol = 1e-13 * max(abs(c) for p in pts for c in p) ** 2

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) - tol

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], float)


def _polygon_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class NormModel:
    """D4-symmetric polyhedral norm from values at first-quadrant unit directions.

    The unit ball is the convex hull of u / value(u) over the D4 images of the
    samples, i.e. the double-dual regularisation of the piecewise-linear gauge.
    """

    directions: np.ndarray
    values: np.ndarray
    p: float | None = None
    provenance: str = ""
    stderr: np.ndarray | None = None
    ball: np.ndarray = field(init=False, repr=False)
    facets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d = np.asarray(self.directions, float).reshape(-1, 2)
        v = np.asarray(self.values, float).ravel()
        if d.shape[0] != v.shape[0] or d.shape[0] == 0:
            raise ValueError("directions and values must have equal nonzero length")
        if np.any(d < 0) or np.any(np.linalg.norm(d, axis=1) == 0):
            raise ValueError("directions must be nonzero first-quadrant vectors")
        if np.any(v <= 0):
            raise ValueError("norm values must be positive")
        d = d / np.linalg.norm(d, axis=1)[:, None]
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, float).ravel())
        pts = np.vstack([_d4_images(u / val) for u, val in zip(d, v)])
        ball = _hull(pts)
        # facet j supports the edge ball[j] -> ball[j+1] with normal a_j, a_j . x = 1
        nxt = np.roll(ball, -1, axis=0)
        det = ball[:, 0] * nxt[:, 1] - ball[:, 1] * nxt[:, 0]
        facets = np.stack([(nxt[:, 1] - ball[:, 1]) / det, (ball[:, 0] - nxt[:, 0]) / det], -1)
        object.__setattr__(self, "ball", ball)
        object.__setattr__(self, "facets", facets)

    def __call__(self, x: Sequence[float]) -> float:
        return float(max(0.0, np.max(self.facets @ np.asarray(x, float))))

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        return np.maximum(np.max(np.asarray(xs, float) @ self.facets.T, axis=1), 0.0)

    def max_on_l1_sphere(self) -> float:
        # convex, so the maximum over the l1 sphere sits at one of its corners
        return max(self((1.0, 0.0)), self((0.0, 1.0)), self((-1.0, 0.0)), self((0.0, -1.0)))

    def with_values(self, values: np.ndarray) -> "NormModel":
        return NormModel(self.directions, values, self.p, self.provenance, self.stderr)

    @classmethod
    def l1(cls) -> "NormModel":
        return cls(np.array([[1.0, 0.0], [1.0, 1.0]]), np.array([1.0, math.sqrt(2.0)]), None, "l1")

    @classmethod
    def l2(cls, count: int = 64) -> "NormModel":
        t = np.linspace(0, math.pi / 4, count + 1)
        return cls(np.stack([np.cos(t), np.sin(t)], -1), np.ones(count + 1), None, f"l2/{count}")

    @classmethod
    def from_estimates(cls, directions, values, p=None, provenance="", stderr=None,
                       dominate_l1: bool = True) -> "NormModel":
        """Model from directional estimates; values are raised to the l1 norm when asked."""
        d = np.asarray(directions, float).reshape(-1, 2)
        d = d / np.linalg.norm(d, axis=1)[:, None]
        v = np.asarray(values, float)
        if dominate_l1:
            v = np.maximum(v, np.abs(d).sum(axis=1))
        return cls(d, v, p, provenance, stderr)

    def to_json(self) -> dict:
        out = {"directions": self.directions.tolist(), "values": self.values.tolist(),
               "p": self.p, "provenance": self.provenance}
        if self.stderr is not None:
            out["stderr"] = self.stderr.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> "NormModel":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(np.array(data["directions"], float), np.array(data["values"], float),
                   data.get("p"), data.get("provenance", ""),
                   None if data.get("stderr") is None else np.array(data["stderr"], float))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "NormModel":
        return cls.from_json(Path(path).read_text())


def dual_norm_eval(norm: NormModel, y: Sequence[float]) -> float:
    """sup of x . y over the unit ball (exact: attained at a ball vertex)."""
    return float(max(0.0, np.max(norm.ball @ np.asarray(y, float))))


def len_norm(curve: PolyCurve, norm) -> float:
    return float(sum(norm(s) for s in curve.segments()))


# ---------------------------------------------------------------- Wulff shape

def equiangular_normals(K: int) -> np.ndarray:
    """Unit normals at angles 2 pi k / K, built from the first octant so that the
    set is exactly invariant under the D4 symmetries."""
    if K < 8 or K % 4:
        raise ValueError("K must be a multiple of 4 and at least 8")
    q = K // 4
    out = np.empty((K, 2))
    for k in range(q):
        a = 2 * math.pi * k / K
        if k == 0:
            c, s = 1.0, 0.0
        elif 2 * k == q:
            c = s = math.sqrt(0.5)
        elif 2 * k <= q:
            c, s = math.cos(a), math.sin(a)
        else:
            # mirror of the first octant across the diagonal
            m = q - k
            c, s = math.sin(2 * math.pi * m / K), math.cos(2 * math.pi * m / K)
        for r, (x, y) in enumerate(((c, s), (-s, c), (-c, -s), (s, -c))):
            out[k + r * q] = (x, y)
    return out


def _intersect_halfplanes(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Vertices (ccw) of {x : normals . x <= offsets}, origin strictly inside."""
    dual = _hull(normals / offsets[:, None])
    a = dual
    b = np.roll(dual, -1, axis=0)
    # vertex where a . x = 1 and b . x = 1
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    v = np.stack([(b[:, 1] - a[:, 1]) / det, (a[:, 0] - b[:, 0]) / det], -1)
    keep = [0]
    for i in range(1, len(v)):
        if np.max(np.abs(v[i] - v[keep[-1]])) > 1e-12:
            keep.append(i)
    if len(keep) > 1 and np.max(np.abs(v[keep[-1]] - v[keep[0]])) <= 1e-12:
        keep.pop()
    return v[keep]


@dataclass(frozen=True, eq=False)
class WulffShape:
    vertices: np.ndarray
    area: float
    normalized: np.ndarray
    K: int

    def curve(self, normalized: bool = True) -> PolyCurve:
        return PolyCurve(self.normalized if normalized else self.vertices, True)

    def to_json(self) -> dict:
        return {"K": self.K, "area": self.area, "vertices": self.vertices.tolist(),
                "normalized": self.normalized.tolist()}

    def to_svg(self, scale: float = 100.0, normalized: bool = True) -> str:
        v = (self.normalized if normalized else self.vertices) * scale
        pad = 10.0
        lo = v.min(axis=0) - pad
        size = v.max(axis=0) - v.min(axis=0) + 2 * pad
        pts = " ".join(f"{x:.6f},{-y:.6f}" for x, y in v)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{lo[0]:.6f} {-(lo[1] + size[1]):.6f} '
                f'{size[0]:.6f} {size[1]:.6f}">\n'
                f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1"/>\n</svg>\n')


def wulff_shape(norm: NormModel, K: int = 256) -> WulffShape:
    """Intersection of the K half-planes n . x <= norm(n) at equiangular unit normals."""
    normals = equiangular_normals(K)
    h = norm.evaluate(normals)
    if np.any(h <= 0):
        raise ValueError("degenerate norm: zero in some direction")
    v = _intersect_halfplanes(normals, h)
    area = _polygon_area(v)
    return WulffShape(v, area, v / math.sqrt(area), K)


def exact_wulff_vertices(norm: NormModel) -> np.ndarray:
    """Wulff shape of the polyhedral model itself: the polar of its unit ball."""
    return _intersect_halfplanes(norm.ball, np.ones(len(norm.ball)))


@dataclass(frozen=True)
class IsoConstant:
    value: float
    K: int
    resolution_bound: float
    stderr: float
    norm: NormModel = field(repr=False)


def _xi(norm: NormModel, K: int) -> float:
    w = wulff_shape(norm, K)
    return len_norm(w.curve(), norm)


def iso_constant(norm: NormModel, K: int = 256, propagate: bool = True) -> IsoConstant:
    """Norm length of the boundary of the unit-area Wulff shape.

    The resolution bound is the gap to the exact polar polygon (the K-gon is an
    outer approximation, so it can only overestimate).  The stderr propagates
    per-direction standard errors through central differences.
    """
    value = _xi(norm, K)
    exact = exact_wulff_vertices(norm)
    res = max(0.0, value - 2.0 * math.sqrt(_polygon_area(exact)))
    se = 0.0
    if propagate and norm.stderr is not None:
        var = 0.0
        for i, s in enumerate(norm.stderr):
            if s == 0:
                continue
            step = 1e-6 * norm.values[i]
            up = norm.values.copy()
            dn = norm.values.copy()
            up[i] += step
            dn[i] -= step
            grad = (_xi(norm.with_values(up), K) - _xi(norm.with_values(dn), K)) / (2 * step)
            var += (grad * s) ** 2
        se = math.sqrt(var)
    return IsoConstant(value, K, res, se, norm)


def is_d4_symmetric(vertices: np.ndarray, tol: float = 1e-9) -> bool:
    pts = np.asarray(vertices, float)
    for image in (pts[:, ::-1], pts * [-1, 1], pts * [1, -1], np.stack([-pts[:, 1], pts[:, 0]], -1)):
        for q in image:
            if np.min(np.max(np.abs(pts - q), axis=1)) > tol:
                return False
    return True


# ---------------------------------------------------------------- estimation

def octant_directions(count: int) -> np.ndarray:
    """count+1 unit vectors at equal angles spanning [0, pi/4]."""
    t = np.array([math.pi / 4 * k / count for k in range(count + 1)])
    return np.stack([np.cos(t), np.sin(t)], -1)


def estimate_norm_model(p: float, lengths: Sequence[int], samples: int, count: int = 2,
                        seed: int = 0) -> NormModel:
    """Time-constant norm from directional estimates on the first octant.

    The value stored for a unit direction u is mu(u) = mu_hat(u) * |u|_1, with
    mu_hat the per-l1-length estimate.
    """
    from .metric import estimate_time_constant

    dirs = octant_directions(count)
    vals, ses = [], []
    for u in dirs:
        est = estimate_time_constant(p, u, lengths, samples, seed=seed)
        l1 = float(np.abs(u).sum())
        vals.append(est.mu_hat * l1)
        ses.append(est.stderr * l1)
    return NormModel.from_estimates(dirs, vals, p, f"time-constant estimate, lengths={list(lengths)}, "
                                    f"samples={samples}, seed={seed}", np.array(ses))
