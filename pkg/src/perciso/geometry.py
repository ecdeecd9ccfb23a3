"""Lattice circuits, Pick volumes, polygonal curves, winding hulls, Hausdorff distance."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._constants import C0

Point = tuple[int, int]
Norm = Callable[[Sequence[float]], float]

_STEPS = {(1, 0): 0, (0, 1): 1, (-1, 0): 2, (0, -1): 3}


def _l1(v: Sequence[float]) -> float:
    return abs(v[0]) + abs(v[1])


# ---------------------------------------------------------------- circuits

def _twice_area(pts: Sequence[Point]) -> int:
    s = 0
    k = len(pts)
    for a in range(k):
        x0, y0 = pts[a]
        x1, y1 = pts[(a + 1) % k]
        s += x0 * y1 - x1 * y0
    return s


@dataclass(frozen=True)
class Circuit:
    """Simple closed lattice path, stored counterclockwise without repeating the start."""

    vertices: tuple[Point, ...]

    def __post_init__(self) -> None:
        pts = self.vertices
        if len(pts) < 4:
            raise ValueError("a circuit needs at least 4 vertices")
        if len(set(pts)) != len(pts):
            raise ValueError("circuit repeats a vertex")
        for a, b in zip(pts, pts[1:] + pts[:1]):
            if (b[0] - a[0], b[1] - a[1]) not in _STEPS:
                raise ValueError(f"non-unit step {a} -> {b}")
        if _twice_area(pts) <= 0:
            raise ValueError("circuit is not counterclockwise")

    @classmethod
    def from_points(cls, points: Iterable[Sequence[int]]) -> "Circuit":
        """Validate a vertex cycle; a repeated endpoint is dropped, clockwise input reversed."""
        pts = [(int(p[0]), int(p[1])) for p in points]
        if len(pts) > 1 and pts[0] == pts[-1]:
            pts = pts[:-1]
        if len(pts) >= 3 and _twice_area(pts) < 0:
            pts = pts[::-1]
        return cls(tuple(pts))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def twice_area(self) -> int:
        return _twice_area(self.vertices)

    @property
    def area(self) -> float:
        return self.twice_area / 2

    @property
    def interior_points(self) -> int:
        # Pick: A = I + B/2 - 1
        return (self.twice_area - self.length + 2) // 2

    def canonical(self) -> "Circuit":
        k = self.vertices.index(min(self.vertices))
        return Circuit(self.vertices[k:] + self.vertices[:k])

    def edges(self) -> list[tuple[Point, Point]]:
        v = self.vertices
        return list(zip(v, v[1:] + v[:1]))

    def bbox(self) -> tuple[int, int, int, int]:
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def l1_diameter(self) -> int:
        s = [p[0] + p[1] for p in self.vertices]
        d = [p[0] - p[1] for p in self.vertices]
        return max(max(s) - min(s), max(d) - min(d))

    def to_json(self) -> list[list[int]]:
        return [[x, y] for x, y in self.vertices]

    def as_curve(self) -> "PolyCurve":
        pts = np.array(self.vertices + self.vertices[:1], float)
        return PolyCurve(pts, True)


def vol(circuit: Circuit) -> int:
    """Lattice points on or inside the circuit: I + B from the shoelace area."""
    if not isinstance(circuit, Circuit):
        raise TypeError("vol expects a Circuit")
    return circuit.interior_points + circuit.length


def rectangle_circuit(x0: int, x1: int, y0: int, y1: int) -> Circuit:
    if x1 <= x0 or y1 <= y0:
        raise ValueError("degenerate rectangle")
    pts = ([(x, y0) for x in range(x0, x1)] + [(x1, y) for y in range(y0, y1)]
           + [(x, y1) for x in range(x1, x0, -1)] + [(x0, y) for y in range(y1, y0, -1)])
    return Circuit(tuple(pts))


def square_circuit(m: int, center: Point = (0, 0)) -> Circuit:
    """Boundary of the box of half-side m."""
    cx, cy = center
    return rectangle_circuit(cx - m, cx + m, cy - m, cy + m)


def circuit_to_json(circuit: Circuit) -> str:
    return json.dumps(circuit.to_json())


def circuit_from_json(text: str) -> Circuit:
    return Circuit.from_points(json.loads(text))


# ---------------------------------------------------------------- weighted counts

@dataclass(frozen=True, eq=False)
class Marks:
    """Boolean marks on lattice points; ``array[i, j]`` marks ``(x0 + i, y0 + j)``."""

    array: np.ndarray
    x0: int
    y0: int

    def __post_init__(self) -> None:
        a = np.asarray(self.array, bool)
        # row prefix: prefix[i, j] = marks with x-index < i on row j
        prefix = np.zeros((a.shape[0] + 1, a.shape[1]), np.int64)
        np.cumsum(a, axis=0, out=prefix[1:])
        object.__setattr__(self, "array", a)
        object.__setattr__(self, "_prefix", prefix)

    @classmethod
    def full(cls, x0: int, x1: int, y0: int, y1: int) -> "Marks":
        return cls(np.ones((x1 - x0 + 1, y1 - y0 + 1), bool), x0, y0)

    def at(self, x: int, y: int) -> bool:
        i, j = x - self.x0, y - self.y0
        if 0 <= i < self.array.shape[0] and 0 <= j < self.array.shape[1]:
            return bool(self.array[i, j])
        return False

    def count_left_of(self, c: int, y: int) -> int:
        """Marked points (a, y) with a < c."""
        j = y - self.y0
        if not 0 <= j < self.array.shape[1]:
            return 0
        i = min(max(c - self.x0, 0), self.array.shape[0])
        return int(self._prefix[i, j])


def _ne_cell_inside(d_in: Point, d_out: Point) -> bool:
    """Whether the unit cell north-east of a ccw boundary vertex lies inside.

    Interior is on the left, i.e. the ccw sweep from the outgoing direction to
    the reversed incoming direction.
    """
    a_out = _STEPS[d_out] * 90
    a_back = _STEPS[(-d_in[0], -d_in[1])] * 90
    sweep = (a_back - a_out) % 360
    return (45 - a_out) % 360 < sweep


def cell_count(circuit: Circuit, marks: Marks) -> int:
    """Marked points whose north-east unit cell lies inside the circuit.

    A Green sum over vertical edges: an upward edge at x = c on row y adds the
    marked points left of c on that row, a downward edge subtracts them.
    """
    total = 0
    for (ax, ay), (bx, by) in circuit.edges():
        if ax == bx:
            if by > ay:
                total += marks.count_left_of(ax, ay)
            else:
                total -= marks.count_left_of(ax, by)
    return total


def weighted_interior_count(circuit: Circuit, marks: Marks) -> int:
    """Marked lattice points of vol(circuit); boundary points count iff marked."""
    pts = circuit.vertices
    k = len(pts)
    inside_cells = cell_count(circuit, marks)
    correction = 0
    for a in range(k):
        prev, cur, nxt = pts[a - 1], pts[a], pts[(a + 1) % k]
        if not marks.at(*cur):
            continue
        d_in = (cur[0] - prev[0], cur[1] - prev[1])
        d_out = (nxt[0] - cur[0], nxt[1] - cur[1])
        # boundary points are counted once, whether or not the Green sum saw them
        correction += 0 if _ne_cell_inside(d_in, d_out) else 1
    return inside_cells + correction


def strict_interior_count(circuit: Circuit, marks: Marks) -> int:
    return weighted_interior_count(circuit, marks) - sum(marks.at(*v) for v in circuit.vertices)


# ---------------------------------------------------------------- isoperimetry

def iso_radius(eps: float) -> int:
    """Smallest R making |g| >= (4 - eps) sqrt(vol) hold when vol > R and |g| <= vol^(2/3).

    Uses |g| >= 4 sqrt(area) and area >= vol - |g|, so it suffices that
    vol^(-1/3) <= 1 - (1 - eps/4)^2.
    """
    if not 0 < eps < 4:
        raise ValueError("eps must lie in (0, 4)")
    return math.ceil((1.0 - (1.0 - eps / 4.0) ** 2) ** -3)


@dataclass(frozen=True)
class IsoCheck:
    holds_4eps: bool | None
    holds_c0: bool
    c0_used: float


def discrete_iso_check(circuit: Circuit, eps: float, R: float | None = None) -> IsoCheck:
    if not 0 < eps < 4:
        raise ValueError("eps must lie in (0, 4)")
    R = iso_radius(eps) if R is None else R
    v = vol(circuit)
    g = circuit.length
    applicable = v > R and g ** 3 <= v ** 2
    holds = (g * g >= (4 - eps) ** 2 * v) if applicable else None
    return IsoCheck(holds, g * g >= C0 * C0 * v, C0)


# ---------------------------------------------------------------- cell sets

def circuit_from_cells(cells: Iterable[Point]) -> Circuit:
    """Boundary circuit of a hole-free, pinch-free, edge-connected set of unit cells.

    Cell (a, b) is the square [a, a+1] x [b, b+1].
    """
    cells = set(cells)
    nxt: dict[Point, Point] = {}
    for a, b in cells:
        # ccw boundary edges with the cell on their left
        for cond, u, w in (((a, b - 1) not in cells, (a, b), (a + 1, b)),
                           ((a + 1, b) not in cells, (a + 1, b), (a + 1, b + 1)),
                           ((a, b + 1) not in cells, (a + 1, b + 1), (a, b + 1)),
                           ((a - 1, b) not in cells, (a, b + 1), (a, b))):
            if cond:
                if u in nxt:
                    raise ValueError("cell set has a pinch point")
                nxt[u] = w
    start = min(nxt)
    pts = [start]
    u = nxt[start]
    while u != start:
        pts.append(u)
        u = nxt[u]
    if len(pts) != len(nxt):
        raise ValueError("cell set boundary is not a single circuit")
    return Circuit(tuple(pts))


def cells_inside(circuit: Circuit) -> set[Point]:
    """Unit cells enclosed by the circuit (crossing parity of cell centres)."""
    x0, x1, y0, y1 = circuit.bbox()
    out = set()
    verticals = [(a[0], min(a[1], b[1])) for a, b in circuit.edges() if a[0] == b[0]]
    rows: dict[int, list[int]] = {}
    for c, y in verticals:
        rows.setdefault(y, []).append(c)
    for y, cs in rows.items():
        cs.sort()
        for k in range(0, len(cs) - 1, 2):
            for x in range(cs[k], cs[k + 1]):
                out.add((x, y))
    return out


def scan_c0(max_vol: int = 24) -> tuple[float, int, int]:
    """Exhaustive minimum of |g| / sqrt(vol) over circuits with vol <= max_vol.

    Enumerates fixed polyominoes (Redelmeier) pruned by the number of covered
    lattice points, which is monotone under adding cells and equals vol for
    hole-free, pinch-free cell sets.  Returns (c0, |g|, vol) of the minimiser.
    """
    best = [math.inf, 0, 0]
    cells: list[Point] = []
    corners: dict[Point, int] = {}

    def add(c: Point) -> None:
        cells.append(c)
        for q in ((c[0], c[1]), (c[0] + 1, c[1]), (c[0], c[1] + 1), (c[0] + 1, c[1] + 1)):
            corners[q] = corners.get(q, 0) + 1

    def remove(c: Point) -> None:
        cells.pop()
        for q in ((c[0], c[1]), (c[0] + 1, c[1]), (c[0], c[1] + 1), (c[0] + 1, c[1] + 1)):
            corners[q] -= 1
            if corners[q] == 0:
                del corners[q]

    def evaluate() -> None:
        s = set(cells)
        perim = sum((a + dx, b + dy) not in s for a, b in s for dx, dy in _STEPS)
        edges = (4 * len(s) + perim) // 2
        # Euler characteristic 1 means no holes; pinches are rejected separately
        if len(corners) - edges + len(s) != 1:
            return
        for (x, y), k in corners.items():
            if k == 2 and (((x, y) in s and (x - 1, y - 1) in s) or ((x - 1, y) in s and (x, y - 1) in s)):
                return
        ratio = perim / math.sqrt(len(corners))
        if ratio < best[0] - 1e-12:
            best[:] = [ratio, perim, len(corners)]

    def valid(c: Point) -> bool:
        return c[1] > 0 or (c[1] == 0 and c[0] >= 0)

    def grow(untried: list[Point], seen: set[Point]) -> None:
        while untried:
            c = untried.pop()
            add(c)
            if len(corners) <= max_vol:
                evaluate()
                new = []
                for dx, dy in _STEPS:
                    q = (c[0] + dx, c[1] + dy)
                    if valid(q) and q not in seen:
                        new.append(q)
                for q in new:
                    seen.add(q)
                grow(untried + new, seen)
                for q in new:
                    seen.discard(q)
            remove(c)

    grow([(0, 0)], {(0, 0)})
    return best[0], best[1], best[2]


# ---------------------------------------------------------------- polygonal curves

@dataclass(frozen=True, eq=False)
class PolyCurve:
    points: np.ndarray
    closed: bool = False

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, float).reshape(-1, 2)
        if pts.shape[0] < 1:
            raise ValueError("empty curve")
        if self.closed and not np.array_equal(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[:1]])
        object.__setattr__(self, "points", pts)

    @classmethod
    def closed_from(cls, pts: Sequence[Sequence[float]]) -> "PolyCurve":
        return cls(np.asarray(pts, float), True)

    def segments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def segment_lengths(self, norm: Norm = _l1) -> np.ndarray:
        return np.array([norm(s) for s in self.segments()])

    def length(self, norm: Norm = _l1) -> float:
        return float(self.segment_lengths(norm).sum())

    def to_json(self) -> dict:
        return {"closed": self.closed, "points": self.points.tolist()}

    @classmethod
    def from_json(cls, data: dict | str) -> "PolyCurve":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(np.array(data["points"], float), bool(data["closed"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "PolyCurve":
        return cls.from_json(Path(path).read_text())

    def sample(self, h: float = 0.25) -> np.ndarray:
        """Points along the curve with spacing at most h (in every coordinate)."""
        out = [self.points[:1]]
        for a, b in zip(self.points[:-1], self.points[1:]):
            k = max(1, int(math.ceil(np.max(np.abs(b - a)) / h)))
            t = np.arange(1, k + 1)[:, None] / k
            out.append(a + t * (b - a))
        return np.vstack(out)


def segment_samples(a: Sequence[float], b: Sequence[float], h: float = 0.25) -> np.ndarray:
    return PolyCurve(np.array([a, b], float)).sample(h)


def _as_curve(curve: "PolyCurve | Circuit") -> PolyCurve:
    return curve.as_curve() if isinstance(curve, Circuit) else curve


def _exit_parameter(a: np.ndarray, d: np.ndarray, x: np.ndarray, r: float) -> float:
    """Largest s in [0, 1] with |a + s d - x|_inf <= r for all smaller s (a is within r)."""
    hi = 1.0
    for k in range(2):
        if d[k] > 0:
            hi = min(hi, (x[k] + r - a[k]) / d[k])
        elif d[k] < 0:
            hi = min(hi, (x[k] - r - a[k]) / d[k])
    return hi


def polygonal_approx(curve: "PolyCurve | Circuit", r: float) -> PolyCurve:
    """Greedy l-inf breakpoints: each new breakpoint is where the curve first leaves
    the closed l-inf ball of radius r around the previous one; the endpoint closes it."""
    if r <= 0:
        raise ValueError("r must be positive")
    curve = _as_curve(curve)
    pts = curve.points
    x = pts[0].copy()
    out = [x.copy()]
    seg = 0
    s = 0.0
    while seg < len(pts) - 1:
        a, b = pts[seg], pts[seg + 1]
        d = b - a
        start = a + s * d
        if np.max(np.abs(start - x)) > r:
            # already outside after a vertex; the exit happened at this point
            x = start.copy()
            out.append(x.copy())
            continue
        e = _exit_parameter(a, d, x, r)
        if e < 1.0 and e >= s:
            # leaves strictly inside this segment (or at its start)
            nxt = a + e * d
            if e == s and np.array_equal(nxt, x):
                seg, s = seg + 1, 0.0
                continue
            x = nxt
            out.append(x.copy())
            s = e
            if np.max(np.abs(b - x)) == 0:
                seg, s = seg + 1, 0.0
            continue
        seg, s = seg + 1, 0.0
    end = pts[-1]
    if not np.array_equal(out[-1], end) or len(out) == 1:
        out.append(end.copy())
    return PolyCurve(np.array(out), curve.closed)


# ---------------------------------------------------------------- winding hull

def winding_numbers(curve: PolyCurve, q: np.ndarray) -> np.ndarray:
    """Winding number of a closed polygon around each query point (crossing rule)."""
    q = np.atleast_2d(np.asarray(q, float))
    pts = curve.points
    w = np.zeros(q.shape[0], np.int64)
    qx, qy = q[:, 0], q[:, 1]
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        cross = (x1 - x0) * (qy - y0) - (qx - x0) * (y1 - y0)
        up = (y0 <= qy) & (y1 > qy) & (cross > 0)
        down = (y0 > qy) & (y1 <= qy) & (cross < 0)
        w += up.astype(np.int64) - down.astype(np.int64)
    return w


def on_curve(curve: PolyCurve, q: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, float))
    hit = np.zeros(q.shape[0], bool)
    for a, b in zip(curve.points[:-1], curve.points[1:]):
        d = b - a
        dd = float(d @ d)
        t = np.zeros(q.shape[0]) if dd == 0 else np.clip(((q - a) @ d) / dd, 0, 1)
        proj = a + t[:, None] * d
        hit |= np.max(np.abs(q - proj), axis=1) <= tol
    return hit


def _lattice_aligned(curve: PolyCurve) -> bool:
    p = curve.points
    if not np.array_equal(p, np.round(p)):
        return False
    d = np.diff(p, axis=0)
    return bool(np.all((d[:, 0] == 0) | (d[:, 1] == 0)))


@dataclass(frozen=True, eq=False)
class WindingHull:
    curve: PolyCurve
    area: float

    def contains(self, q: Sequence[float] | np.ndarray) -> np.ndarray | bool:
        arr = np.atleast_2d(np.asarray(q, float))
        res = (winding_numbers(self.curve, arr) % 2 == 1) | on_curve(self.curve, arr)
        return bool(res[0]) if np.asarray(q).ndim == 1 else res

    def winding(self, q: Sequence[float]) -> int:
        return int(winding_numbers(self.curve, np.asarray(q, float))[0])

    def sample(self, h: float = 0.25) -> np.ndarray:
        """Grid points of the hull at spacing h together with curve samples."""
        p = self.curve.points
        lo = np.floor(p.min(axis=0) / h) * h
        hi = np.ceil(p.max(axis=0) / h) * h
        gx = np.arange(lo[0], hi[0] + h / 2, h)
        gy = np.arange(lo[1], hi[1] + h / 2, h)
        grid = np.stack(np.meshgrid(gx, gy, indexing="ij"), -1).reshape(-1, 2)
        inside = grid[winding_numbers(self.curve, grid) % 2 == 1]
        return np.vstack([inside, self.curve.sample(h)])


def _odd_faces(curve: PolyCurve):
    """Faces of the planar arrangement of a closed polygon with odd winding number."""
    from shapely.geometry import LineString
    from shapely.ops import polygonize, unary_union

    lines = unary_union([LineString([a, b]) for a, b in zip(curve.points[:-1], curve.points[1:])
                         if not np.array_equal(a, b)])
    faces = []
    for face in polygonize(lines):
        rp = face.representative_point()
        if winding_numbers(curve, np.array([[rp.x, rp.y]]))[0] % 2 == 1:
            faces.append(face)
    return faces, lines


def hull_area(curve: PolyCurve) -> float:
    """Area of the odd-winding region.

    Lattice-aligned curves: count of unit cells with odd winding (exact).
    Otherwise: exact sum over faces of the planar arrangement.
    """
    if not curve.closed:
        raise ValueError("winding hull needs a closed curve")
    if curve.points.shape[0] < 3:
        return 0.0
    if _lattice_aligned(curve):
        p = curve.points
        x0, y0 = p.min(axis=0)
        x1, y1 = p.max(axis=0)
        if x1 == x0 or y1 == y0:
            return 0.0
        cx, cy = np.meshgrid(np.arange(x0, x1) + 0.5, np.arange(y0, y1) + 0.5, indexing="ij")
        w = winding_numbers(curve, np.stack([cx.ravel(), cy.ravel()], -1))
        return float(np.count_nonzero(w % 2 == 1))
    faces, _ = _odd_faces(curve)
    return float(sum(f.area for f in faces))


def winding_hull(curve: PolyCurve) -> WindingHull:
    curve = _as_curve(curve)
    if not curve.closed:
        raise ValueError("winding hull needs a closed curve")
    return WindingHull(curve, hull_area(curve))


# ---------------------------------------------------------------- Hausdorff

def _samples(obj, h: float) -> np.ndarray:
    if isinstance(obj, WindingHull):
        return obj.sample(h)
    if isinstance(obj, Circuit):
        return obj.as_curve().sample(h)
    if isinstance(obj, PolyCurve):
        return obj.sample(h)
    return np.atleast_2d(np.asarray(obj, float))


def hausdorff(a, b, h: float = 0.25) -> float:
    """l-inf Hausdorff distance between point sets, curves (sampled at h) or hulls."""
    pa = _samples(a, h)
    pb = _samples(b, h)
    if pa.size == 0 or pb.size == 0:
        raise ValueError("empty input")
    da, _ = cKDTree(pb).query(pa, p=np.inf)
    db, _ = cKDTree(pa).query(pb, p=np.inf)
    return float(max(da.max(), db.max()))


# ---------------------------------------------------------------- concatenation

def concatenate(gamma: Sequence[Point], gamma_prime: Sequence[Point]) -> list[Point]:
    """Join two simple paths sharing an endpoint into a simple path.

    Cuts gamma at its first vertex lying on gamma_prime and continues along
    gamma_prime from that vertex.
    """
    gamma = [tuple(p) for p in gamma]
    gamma_prime = [tuple(p) for p in gamma_prime]
    if not gamma or not gamma_prime or gamma[-1] != gamma_prime[0]:
        raise ValueError("last vertex of gamma must equal first vertex of gamma_prime")
    where = {p: i for i, p in enumerate(gamma_prime)}
    for k, u in enumerate(gamma):
        if u in where:
            return gamma[:k] + gamma_prime[where[u]:]
    raise AssertionError("unreachable: endpoints coincide")


def close_path(path: Sequence[Point], back: Sequence[Point]) -> Circuit | None:
    """Circuit from a simple path and a path ``back`` from its end to its start.

    The first vertex of ``back`` (after its start) that lies on ``path`` closes
    the loop.  Returns None if the loop is too short to be a circuit.
    """
    path = [tuple(p) for p in path]
    back = [tuple(p) for p in back]
    if path[-1] != back[0] or back[-1] != path[0]:
        raise ValueError("paths do not form a loop")
    where = {p: i for i, p in enumerate(path)}
    for i in range(1, len(back)):
        if back[i] in where:
            loop = path[where[back[i]]:] + back[1:i]
            if len(loop) < 4:
                return None
            try:
                return Circuit.from_points(loop)
            except ValueError:
                return None
    return None


# ---------------------------------------------------------------- simplification

def _is_simple(curve: PolyCurve) -> bool:
    from shapely.geometry import LinearRing, Polygon

    pts = curve.points[:-1]
    if pts.shape[0] < 3:
        return False
    ring = LinearRing(pts)
    return bool(ring.is_simple and Polygon(ring).area > 0)


def _ccw_curve(coords: np.ndarray) -> PolyCurve:
    pts = np.asarray(coords, float)
    if pts.shape[0] > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    x, y = pts[:, 0], pts[:, 1]
    if np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y) < 0:
        pts = pts[::-1]
    return PolyCurve(pts, True)


def _trace_graph(lines):
    import networkx as nx

    g = nx.Graph()
    for ls in getattr(lines, "geoms", [lines]):
        c = list(ls.coords)
        for a, b in zip(c, c[1:]):
            g.add_edge(a, b, weight=math.dist(a, b))
    return g


def _connect(geom, graph, width: float):
    """Bridge parts and holes of a region along trace edges until it is one simple polygon."""
    import networkx as nx
    from shapely.geometry import LineString, Point as SPoint, Polygon
    from shapely.ops import unary_union

    def nodes_on(ring):
        return [v for v in graph.nodes if ring.distance(SPoint(v)) < 1e-9]

    def bridge(src, dst):
        dist, paths = nx.multi_source_dijkstra(graph, set(src))
        target = min((v for v in dst if v in dist), key=lambda v: dist[v])
        path = paths[target]
        if len(path) == 1:
            return SPoint(path[0]).buffer(width, cap_style="square")
        return LineString(path).buffer(width / 2, cap_style="square", join_style="mitre")

    for _ in range(64):
        if geom.geom_type == "MultiPolygon":
            parts = sorted(geom.geoms, key=lambda g: -g.area)
            geom = unary_union([geom, bridge(nodes_on(parts[0].exterior),
                                             [v for p in parts[1:] for v in nodes_on(p.exterior)])])
            continue
        if geom.geom_type == "Polygon" and geom.interiors:
            hole = Polygon(geom.interiors[0])
            geom = geom.difference(bridge(nodes_on(hole.exterior), nodes_on(geom.exterior)))
            continue
        break
    return geom


def simplify_to_simple(curve: PolyCurve, eps: float, norm: Norm = _l1) -> PolyCurve:
    """A simple closed polygon whose interior is within eps (area) of hull(curve)
    and whose norm-length exceeds the curve's by less than eps."""
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    if eps <= 0:
        raise ValueError("eps must be positive")
    curve = _as_curve(curve)
    if not curve.closed:
        raise ValueError("closed curve required")
    if _is_simple(curve):
        return curve
    base_len = curve.length(norm)
    faces, lines = _odd_faces(curve)
    if not faces:
        # zero-area hull: a tiny square at the start point
        s = min(math.sqrt(eps) / 2, eps / (8 * max(norm((1.0, 0.0)), norm((0.0, 1.0)))))
        x, y = curve.points[0]
        return PolyCurve(np.array([[x, y], [x + s, y], [x + s, y + s], [x, y + s]]), True)
    region = unary_union(faces)
    graph = _trace_graph(lines)
    width = min(1e-3, eps / (8 * max(1.0, base_len)))
    for _ in range(30):
        geom = _connect(region, graph, width)
        if geom.geom_type == "Polygon" and not geom.interiors:
            out = _ccw_curve(np.array(geom.exterior.coords))
            ok = (_is_simple(out)
                  and region.symmetric_difference(Polygon(out.points)).area < eps
                  and out.length(norm) <= base_len + eps)
            if ok:
                return out
        width /= 4
    raise ValueError("could not simplify curve within the tolerance")
