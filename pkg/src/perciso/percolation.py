"""Bond percolation on the box B(n) = [-n, n]^2.

Edge states are stored as two boolean arrays indexed by lattice offsets
``i = x + n`` and ``j = y + n``:

* ``horizontal[i, j]`` is the edge ``(x, y)-(x+1, y)``, shape ``(2n, 2n+1)``;
* ``vertical[i, j]`` is the edge ``(x, y)-(x, y+1)``, shape ``(2n+1, 2n)``.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _hash

Point = tuple[int, int]
Edge = tuple[Point, Point]


@dataclass(frozen=True)
class GridSpec:
    n: int
    p: float
    master_seed: int = 0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        # p = 1 is admitted as the all-open degenerate case
        if not (0.0 < self.p <= 1.0):
            raise ValueError(f"p must lie in (0, 1], got {self.p!r}")
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def side(self) -> int:
        return 2 * self.n + 1

    @property
    def volume(self) -> int:
        return self.side**2

    @classmethod
    def from_json(cls, block: dict | str) -> "GridSpec":
        if isinstance(block, str):
            block = json.loads(block)
        return cls(n=int(block["n"]), p=float(block["p"]), master_seed=int(block.get("seed", 0)))

    def to_json(self) -> dict:
        return {"n": self.n, "p": self.p, "seed": self.master_seed}


def load_grid_spec(path: str | Path) -> GridSpec:
    return GridSpec.from_json(Path(path).read_text())


@dataclass(frozen=True)
class Rect:
    """Closed lattice rectangle ``[x0, x1] x [y0, y1]``."""

    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def contains(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def contains_point(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def intersection(self, other: "Rect") -> "Rect | None":
        r = Rect(max(self.x0, other.x0), min(self.x1, other.x1),
                 max(self.y0, other.y0), min(self.y1, other.y1))
        if r.x0 > r.x1 or r.y0 > r.y1:
            return None
        return r


def _normalize_edge(edge: Edge) -> Edge:
    (a, b) = edge
    a = (int(a[0]), int(a[1]))
    b = (int(b[0]), int(b[1]))
    if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
        raise ValueError(f"{edge!r} is not a unit lattice edge")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True, eq=False)
class Configuration:
    spec: GridSpec
    sample_index: int
    horizontal: np.ndarray
    vertical: np.ndarray
    forced_edges: frozenset = field(default_factory=frozenset)

    @property
    def n(self) -> int:
        return self.spec.n

    def edge_slot(self, edge: Edge) -> tuple[bool, int, int]:
        """(is_horizontal, i, j) array slot for an edge, validated against B(n)."""
        a, b = _normalize_edge(edge)
        n = self.n
        if max(abs(a[0]), abs(a[1]), abs(b[0]), abs(b[1])) > n:
            raise ValueError(f"edge {edge!r} is not an edge of B({n})")
        horizontal = a[1] == b[1]
        return horizontal, a[0] + n, a[1] + n

    def is_open(self, edge: Edge) -> bool:
        horizontal, i, j = self.edge_slot(edge)
        return bool(self.horizontal[i, j] if horizontal else self.vertical[i, j])

    def open_count(self) -> int:
        return int(self.horizontal.sum() + self.vertical.sum())

    def same_states(self, other: "Configuration") -> bool:
        return (np.array_equal(self.horizontal, other.horizontal)
                and np.array_equal(self.vertical, other.vertical))


def edge_count(n: int) -> int:
    return 2 * (2 * n) * (2 * n + 1)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=bool)
    a.setflags(write=False)
    return a


def _edge_uniforms(spec: GridSpec, sample_index: int) -> tuple[np.ndarray, np.ndarray]:
    n = spec.n
    key = _hash.stream_key(spec.master_seed, sample_index, _hash.TAG_EDGE)
    xs = np.arange(-n, n + 1)
    hx, hy = np.meshgrid(xs[:-1], xs, indexing="ij")
    vx, vy = np.meshgrid(xs, xs[:-1], indexing="ij")
    uh = _hash.uniforms(key, _hash.point_keys(hx, hy, 0))
    uv = _hash.uniforms(key, _hash.point_keys(vx, vy, 1))
    return uh, uv


def sample_configuration(spec: GridSpec, sample_index: int,
                         forced: Iterable[tuple[Edge, bool]] = ()) -> Configuration:
    """Draw the configuration with the given stream index.

    Each edge state is a hash of (seed, index, edge coordinates), so the same
    edge gets the same state in every box that contains it.
    """
    uh, uv = _edge_uniforms(spec, sample_index)
    config = Configuration(spec, int(sample_index), _frozen(uh < spec.p), _frozen(uv < spec.p))
    forced = list(forced)
    for state in (False, True):
        chosen = [e for e, s in forced if bool(s) == state]
        if chosen:
            config = force_edges(config, chosen, state)
    return config


def force_edges(config: Configuration, edges: Iterable[Edge], state: bool) -> Configuration:
    h = np.array(config.horizontal)
    v = np.array(config.vertical)
    record = set(config.forced_edges)
    for edge in edges:
        horizontal, i, j = config.edge_slot(edge)
        (h if horizontal else v)[i, j] = state
        norm = _normalize_edge(edge)
        record.discard((norm, not state))
        record.add((norm, bool(state)))
    return Configuration(config.spec, config.sample_index, _frozen(h), _frozen(v), frozenset(record))


def all_open(n: int) -> Configuration:
    return sample_configuration(GridSpec(n, 1.0), 0)


def from_open_edges(n: int, edges: Iterable[Edge], p: float = 0.5, seed: int = 0) -> Configuration:
    """Configuration whose open edges are exactly ``edges`` (hand-built instances)."""
    spec = GridSpec(n, p, seed)
    base = Configuration(spec, 0, _frozen(np.zeros((2 * n, 2 * n + 1), bool)),
                         _frozen(np.zeros((2 * n + 1, 2 * n), bool)))
    out = force_edges(base, edges, True)
    return Configuration(spec, 0, out.horizontal, out.vertical)


# ---------------------------------------------------------------- labelling

def label_grid(h: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, int]:
    """Connected components of a grid whose open edges are ``h`` and ``v``.

    Labels are numbered by first appearance in row-major ``[i, j]`` order.
    """
    W, H = v.shape[0], h.shape[1]
    idx = np.arange(W * H).reshape(W, H)
    src = np.concatenate([idx[:-1, :][h], idx[:, :-1][v]])
    dst = np.concatenate([idx[1:, :][h], idx[:, 1:][v]])
    graph = coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)), shape=(W * H, W * H)).tocsr()
    count, raw = connected_components(graph, directed=False)
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse].reshape(W, H).astype(np.int64), int(count)


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    n: int
    labels: np.ndarray
    sizes: np.ndarray
    diameters: np.ndarray

    @property
    def count(self) -> int:
        return int(self.sizes.size)

    def label_of(self, x: int, y: int) -> int:
        return int(self.labels[x + self.n, y + self.n])

    def largest(self) -> int:
        return int(np.argmax(self.sizes))

    def mask(self, label: int) -> np.ndarray:
        return self.labels == label


def _diameters(labels: np.ndarray, count: int, n: int) -> np.ndarray:
    W, H = labels.shape
    x, y = np.meshgrid(np.arange(W) - n, np.arange(H) - n, indexing="ij")
    flat = labels.ravel()
    out = np.zeros(count, dtype=np.int64)
    # l1 diameter of a finite set = max spread of x+y or x-y
    for coord in ((x + y).ravel(), (x - y).ravel()):
        hi = np.full(count, np.iinfo(np.int64).min)
        lo = np.full(count, np.iinfo(np.int64).max)
        np.maximum.at(hi, flat, coord)
        np.minimum.at(lo, flat, coord)
        out = np.maximum(out, hi - lo)
    return out


def label_clusters(config: Configuration) -> ClusterLabeling:
    labels, count = label_grid(config.horizontal, config.vertical)
    sizes = np.bincount(labels.ravel(), minlength=count)
    return ClusterLabeling(config.n, labels, sizes, _diameters(labels, count, config.n))


# ---------------------------------------------------------------- uniqueness

@dataclass(frozen=True)
class GiantReport:
    uniq_event_holds: bool
    giant_label: int | None
    giant_size: int
    second_largest: int
    theta_n_global: float
    kappa: float


def small_cluster_bound(n: int) -> int:
    """ceil((ln n)^5), the size allowed for non-giant clusters."""
    return math.ceil(math.log(n) ** 5) if n > 1 else 0


def giant_threshold(n: int, kappa: float) -> float:
    return kappa * (2 * n) ** 2


def check_uniq_event(labeling: ClusterLabeling, kappa: float) -> GiantReport:
    if not (0.0 < kappa < 1.0):
        raise ValueError("kappa must lie in (0, 1)")
    n = labeling.n
    sizes = labeling.sizes
    order = np.argsort(-sizes, kind="stable")
    top = int(sizes[order[0]])
    second = int(sizes[order[1]]) if sizes.size > 1 else 0
    big = int(np.count_nonzero(sizes >= giant_threshold(n, kappa)))
    holds = big == 1 and second <= small_cluster_bound(n)
    giant = int(order[0]) if big >= 1 else None
    return GiantReport(holds, giant, top if giant is not None else 0, second,
                       top / (2 * n + 1) ** 2 if giant is not None else 0.0, kappa)


def estimate_theta(p: float, n: int, samples: int, seed: int = 0) -> tuple[float, float]:
    """Fraction of samples whose origin lies in the largest cluster of B(n)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    spec = GridSpec(n, p, seed)
    hits = 0
    for k in range(samples):
        lab = label_clusters(sample_configuration(spec, k))
        hits += lab.label_of(0, 0) == lab.largest()
    theta = hits / samples
    return theta, math.sqrt(theta * (1.0 - theta) / samples)


# reference scale for the cached density estimate behind the default kappa
THETA_REFERENCE_N = 64
THETA_REFERENCE_SAMPLES = 400
THETA_REFERENCE_SEED = 0x7E7A


@lru_cache(maxsize=None)
def theta_reference(p: float) -> float:
    if p >= 1.0:
        return 1.0
    theta, _ = estimate_theta(p, THETA_REFERENCE_N, THETA_REFERENCE_SAMPLES, THETA_REFERENCE_SEED)
    return theta


def default_kappa(p: float) -> float:
    return min(max(theta_reference(p) / 2.0, 1e-6), 0.5)


def uniq_report(config: Configuration, kappa: float | None = None,
                labeling: ClusterLabeling | None = None) -> tuple[ClusterLabeling, GiantReport]:
    labeling = labeling or label_clusters(config)
    return labeling, check_uniq_event(labeling, default_kappa(config.spec.p) if kappa is None else kappa)


# ---------------------------------------------------------------- crossings

@dataclass(frozen=True, eq=False)
class RegionClusters:
    """Clusters of the open subgraph restricted to a region.

    ``labels`` covers the whole box (-1 outside the region); ``flags[c]`` is
    the property tested for region cluster ``c``.
    """

    n: int
    labels: np.ndarray
    flags: np.ndarray

    def flag_at(self, x: int, y: int) -> bool:
        lab = self.labels[x + self.n, y + self.n]
        return bool(lab >= 0 and self.flags[lab])

    def any(self) -> bool:
        return bool(self.flags.any())


def _check_rect(config: Configuration, rect: Rect) -> None:
    n = config.n
    if rect.width <= 0 or rect.height <= 0:
        raise ValueError(f"degenerate rectangle {rect}")
    if not Rect(-n, n, -n, n).contains(rect):
        raise ValueError(f"rectangle {rect} is not inside B({n})")


def _region_masks(config: Configuration, rects: Sequence[Rect]):
    n = config.n
    L = 2 * n + 1
    vert = np.zeros((L, L), bool)
    h = np.zeros_like(config.horizontal)
    v = np.zeros_like(config.vertical)
    for r in rects:
        i0, i1, j0, j1 = r.x0 + n, r.x1 + n, r.y0 + n, r.y1 + n
        vert[i0:i1 + 1, j0:j1 + 1] = True
        h[i0:i1, j0:j1 + 1] = True
        v[i0:i1 + 1, j0:j1] = True
    return vert, h & config.horizontal, v & config.vertical


def _region_labels(config: Configuration, rects: Sequence[Rect]) -> tuple[np.ndarray, int]:
    vert, h, v = _region_masks(config, rects)
    raw, _ = label_grid(h, v)
    present = np.unique(raw[vert])
    remap = np.full(raw.max() + 1, -1, dtype=np.int64)
    remap[present] = np.arange(present.size)
    labels = remap[raw]
    labels[~vert] = -1
    return labels, int(present.size)


def _sides(rect: Rect, n: int):
    i0, i1, j0, j1 = rect.x0 + n, rect.x1 + n, rect.y0 + n, rect.y1 + n
    return {
        "left": (np.full(j1 - j0 + 1, i0), np.arange(j0, j1 + 1)),
        "right": (np.full(j1 - j0 + 1, i1), np.arange(j0, j1 + 1)),
        "bottom": (np.arange(i0, i1 + 1), np.full(i1 - i0 + 1, j0)),
        "top": (np.arange(i0, i1 + 1), np.full(i1 - i0 + 1, j1)),
    }


def crossing_check(config: Configuration, rect: Rect) -> RegionClusters:
    """Flag clusters of ``rect`` that touch all four of its sides."""
    _check_rect(config, rect)
    labels, count = _region_labels(config, [rect])
    flags = np.ones(count, bool)
    for ii, jj in _sides(rect, config.n).values():
        touched = np.zeros(count, bool)
        touched[labels[ii, jj]] = True
        flags &= touched
    return RegionClusters(config.n, labels, flags)


def overlap_connected(rects: Sequence[Rect]) -> bool:
    k = len(rects)
    seen = {0}
    stack = [0]
    while stack:
        a = stack.pop()
        for b in range(k):
            if b in seen:
                continue
            inter = rects[a].intersection(rects[b])
            if inter is not None and inter.width > 0 and inter.height > 0:
                seen.add(b)
                stack.append(b)
    return len(seen) == k


def _longest_gap(member: np.ndarray) -> int:
    best = run = 0
    for m in member:
        run = 0 if m else run + 1
        best = max(best, run)
    return best


def strongly_crossing_check(config: Configuration, rects: Sequence[Rect],
                            interval_len: int) -> RegionClusters:
    """Flag clusters of the union region meeting every long boundary interval.

    Intervals are runs of consecutive vertices along one side of a listed
    rectangle; a cluster passes when it meets every run of ``interval_len``
    or more vertices, i.e. its longest gap along each side is shorter.
    """
    rects = list(rects)
    if not rects:
        raise ValueError("no rectangles given")
    for r in rects:
        _check_rect(config, r)
    if not overlap_connected(rects):
        raise ValueError("rectangle overlap graph is disconnected")
    if interval_len < 1:
        raise ValueError("interval_len must be >= 1")
    labels, count = _region_labels(config, rects)
    flags = np.zeros(count, bool)
    for c in range(count):
        ok = True
        for r in rects:
            for ii, jj in _sides(r, config.n).values():
                if _longest_gap(labels[ii, jj] == c) >= interval_len:
                    ok = False
                    break
            if not ok:
                break
        flags[c] = ok
    return RegionClusters(config.n, labels, flags)


# ---------------------------------------------------------------- dominos

@dataclass(frozen=True)
class Domino:
    rect: Rect
    aligned: bool  # True when of the grid form [im,(i+2)m]x[jm,(j+1)m] or its transpose


def _covered(rect_list: Sequence[Rect], x: int, y: int) -> bool:
    return any(r.contains_point(x, y) for r in rect_list)


def domino_cover(region: Sequence[Rect], m: int) -> list[Domino]:
    """Cover a union of rectangles by 2m x m and m x 2m dominos.

    All grid-aligned dominos inside the region come first; vertices they miss
    are then covered greedily by dominos shifted to stay inside the containing
    rectangle where its size permits (and overhanging it otherwise).
    """
    region = list(region)
    if m < 1:
        raise ValueError("m must be >= 1")
    if not region:
        raise ValueError("empty region")
    for r in region:
        if r.width < 0 or r.height < 0:
            raise ValueError(f"invalid rectangle {r}")

    def inside(d: Rect) -> bool:
        return any(r.contains(d) for r in region)

    out: list[Domino] = []
    seen: set[Rect] = set()
    x_lo = min(r.x0 for r in region)
    x_hi = max(r.x1 for r in region)
    y_lo = min(r.y0 for r in region)
    y_hi = max(r.y1 for r in region)
    for i in range(math.floor(x_lo / m), math.ceil(x_hi / m) + 1):
        for j in range(math.floor(y_lo / m), math.ceil(y_hi / m) + 1):
            for w, h in ((2, 1), (1, 2)):
                d = Rect(i * m, (i + w) * m, j * m, (j + h) * m)
                if d not in seen and inside(d):
                    seen.add(d)
                    out.append(Domino(d, True))

    def place(lo: int, hi: int, coord: int, size: int) -> int:
        # start of a window of length `size` containing coord, kept inside [lo, hi] if possible
        start = min(max(coord - size // 2, lo), hi - size)
        return start if hi - lo >= size else lo - (size - (hi - lo)) // 2

    for r in region:
        for x in range(r.x0, r.x1 + 1):
            for y in range(r.y0, r.y1 + 1):
                if _covered([d.rect for d in out], x, y):
                    continue
                # pick the orientation that fits the rectangle better
                w, h = (2 * m, m) if r.width >= r.height else (m, 2 * m)
                x0 = place(r.x0, r.x1, x, w)
                y0 = place(r.y0, r.y1, y, h)
                out.append(Domino(Rect(x0, x0 + w, y0, y0 + h), False))
    return out


def domino_union_covers(region: Sequence[Rect], dominos: Sequence[Domino]) -> bool:
    rects = [d.rect for d in dominos]
    return all(_covered(rects, x, y)
               for r in region for x in range(r.x0, r.x1 + 1) for y in range(r.y0, r.y1 + 1))


# ---------------------------------------------------------------- persistence

MAGIC = b"PERC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHd")   # magic, version, n, p: 16 bytes
_TRAILER = struct.Struct("<QQ")     # seed, sample index


def save_configuration(config: Configuration, path: str | Path) -> None:
    """Write header, seed block and packed edge bits (horizontal then vertical)."""
    n = config.n
    if n >= 2**16:
        raise ValueError("n too large for the file format")
    bits = np.packbits(np.concatenate([config.horizontal.ravel(), config.vertical.ravel()]))
    payload = (_HEADER.pack(MAGIC, FORMAT_VERSION, n, config.spec.p)
               + _TRAILER.pack(config.spec.master_seed, config.sample_index) + bits.tobytes())
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise OSError(f"cannot write configuration to {path}: {exc}") from exc


def load_configuration(path: str | Path) -> Configuration:
    data = Path(path).read_bytes()
    magic, version, n, p = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a configuration file")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    seed, index = _TRAILER.unpack_from(data, _HEADER.size)
    ne = edge_count(n)
    bits = np.unpackbits(np.frombuffer(data, np.uint8, offset=_HEADER.size + _TRAILER.size))[:ne]
    half = ne // 2
    h = bits[:half].astype(bool).reshape(2 * n, 2 * n + 1)
    v = bits[half:].astype(bool).reshape(2 * n + 1, 2 * n)
    return Configuration(GridSpec(n, p, seed), int(index), _frozen(h), _frozen(v))
