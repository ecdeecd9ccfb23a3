"""Isoperimetric constant of the giant cluster: exact search, certificates, candidates."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._constants import C0
from ._kernels import best_cycle, negative_cycle
from .geometry import (Circuit, Marks, PolyCurve, close_path, concatenate, iso_radius,
                       polygonal_approx, square_circuit, strict_interior_count,
                       vol, weighted_interior_count, _ne_cell_inside)
from .metric import ClosestVertexIndex, closest_vertex, geodesic
from .percolation import ClusterLabeling, Configuration, label_clusters, uniq_report
from .wulff import NormModel, WulffShape, len_norm, wulff_shape

Point = tuple[int, int]
_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def default_cap(n: int) -> int:
    """Half the box volume, rounded down."""
    return (2 * n + 1) ** 2 // 2


@dataclass(frozen=True)
class PhiResult:
    n: int
    p: float
    seed: int
    sample_index: int
    lower_bound: float
    upper_bound: float
    witness: Circuit | None
    method: tuple[str, ...]
    cap: int
    vol: int | None = None
    interior_count: int | None = None
    event_failed: bool = False

    @property
    def empty(self) -> bool:
        return self.witness is None and not self.event_failed

    def to_json(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else (None if math.isnan(x) else "inf")

        return {"n": self.n, "p": self.p, "seed": self.seed, "sample_index": self.sample_index,
                "lb": num(self.lower_bound), "ub": num(self.upper_bound), "method": list(self.method),
                "cap": self.cap, "witness": None if self.witness is None else self.witness.to_json(),
                "vol": self.vol, "interior_count": self.interior_count,
                "event_failed": self.event_failed}


@dataclass(frozen=True)
class SolverConfig:
    """``strategy`` is one of bruteforce, candidates, parametric, or None for
    exact search when n <= 4 and candidates otherwise."""

    strategy: str | None = None
    eps: tuple[float, ...] = (0.02, 0.05, 0.1, 0.2)
    local_search_budget: int = 400
    norm: NormModel | None = None
    K: int = 256
    kappa: float | None = None
    cap: int | None = None
    require_event: bool = True
    spacing: float | None = None
    spacing_fractions: tuple[float, ...] = (0.125, 0.25, 0.375)
    rectangles: int = 5
    strips: int = 0
    parametric_max_n: int = 8
    lagrangian_max_n: int = 16

    def __post_init__(self) -> None:
        if self.strategy not in (None, "bruteforce", "candidates", "parametric"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if any(not 0 < e < 0.25 for e in self.eps):
            raise ValueError("eps values must lie in (0, 1/4)")
        if self.local_search_budget < 0:
            raise ValueError("budget must be >= 0")


# ---------------------------------------------------------------- helpers

def giant_marks(n: int, mask: np.ndarray) -> Marks:
    return Marks(mask, -n, -n)


def _giant(config: Configuration, labeling: ClusterLabeling | None, kappa, require_event: bool):
    """Giant label, or None. Without the event, the unique largest cluster stands in."""
    labeling, report = uniq_report(config, kappa, labeling)
    if report.uniq_event_holds:
        return labeling, report.giant_label, True
    if require_event:
        return labeling, None, False
    sizes = labeling.sizes
    top = int(np.argmax(sizes))
    if np.count_nonzero(sizes == sizes[top]) > 1:
        return labeling, None, False
    return labeling, top, False


def circuit_ratio(circuit: Circuit, marks: Marks) -> tuple[int, int]:
    """(|g|, marked points of vol(g))."""
    return circuit.length, weighted_interior_count(circuit, marks)


def circuit_is_open(config: Configuration, circuit: Circuit) -> bool:
    n = config.n
    for (ax, ay), (bx, by) in circuit.edges():
        if max(abs(ax), abs(ay), abs(bx), abs(by)) > n or not config.is_open(((ax, ay), (bx, by))):
            return False
    return True


def check_witness(config: Configuration, circuit: Circuit, mask: np.ndarray, cap: int) -> bool:
    n = config.n
    return (circuit_is_open(config, circuit)
            and all(mask[x + n, y + n] for x, y in circuit.vertices)
            and vol(circuit) <= cap)


def _prefix(mask: np.ndarray) -> np.ndarray:
    out = np.zeros((mask.shape[0] + 1, mask.shape[1]), np.int64)
    np.cumsum(mask, axis=0, out=out[1:])
    return out


def _from_ids(ids: Sequence[int], n: int) -> Circuit:
    L = 2 * n + 1
    return Circuit(tuple((int(u // L) - n, int(u % L) - n) for u in ids))


# ---------------------------------------------------------------- exact search

def brute_force_phi(config: Configuration, cap: int | None = None, *,
                    labeling: ClusterLabeling | None = None) -> PhiResult:
    """Exact minimum of |g| / |C cap vol(g)| over open circuits in the largest cluster.

    The largest cluster must be unique.  With no feasible circuit the result
    carries an infinite value and no witness.
    """
    n = config.n
    if n > 4:
        raise ValueError("exhaustive search is limited to n <= 4")
    cap = default_cap(n) if cap is None else int(cap)
    labeling = labeling or label_clusters(config)
    sizes = labeling.sizes
    top = int(np.argmax(sizes))
    if np.count_nonzero(sizes == sizes[top]) > 1:
        raise ValueError("no unique largest cluster")
    mask = labeling.labels == top
    length, count, ids, _ = best_cycle(config.horizontal, config.vertical, mask, _prefix(mask), False, cap)
    spec = config.spec
    if length == 0:
        return PhiResult(n, spec.p, spec.master_seed, config.sample_index, math.inf, math.inf, None,
                         ("bruteforce", "empty"), cap)
    c = _from_ids(ids, n)
    ratio = length / count
    return PhiResult(n, spec.p, spec.master_seed, config.sample_index, ratio, ratio, c,
                     ("bruteforce",), cap, vol(c), int(count))


def brute_force_interior_ratio(config: Configuration, mask: np.ndarray | None = None):
    """Exact uncapped minimum of |g| / (marked points strictly inside g).

    Returns (ratio, circuit), or (inf, None) when no circuit has a marked
    interior point.
    """
    if config.n > 4:
        raise ValueError("exhaustive search is limited to n <= 4")
    if mask is None:
        lab = label_clusters(config)
        mask = lab.labels == lab.largest()
    length, count, ids, _ = best_cycle(config.horizontal, config.vertical, mask, _prefix(mask), True, 0)
    if length == 0:
        return math.inf, None
    return length / count, _from_ids(ids, config.n)


# ---------------------------------------------------------------- certificates

def certificate_terms(n: int, cap: int, eps: float = 0.1, R: float | None = None,
                      c0: float = C0) -> dict[str, float]:
    """Lower bounds on n * |g| / vol(g) valid for every circuit with vol(g) <= cap.

    ``c0``: |g| >= c0 sqrt(vol).  ``three_case``: vol <= R, |g| >= vol^(2/3), or
    the (4 - eps) inequality.  ``lattice``: a circuit of length l has
    vol <= (l/4 + 1)^2, hence |g| / vol >= 4 (sqrt(cap) - 1) / cap.
    """
    if cap < 4:
        raise ValueError("cap must be >= 4")
    R = iso_radius(eps) if R is None else R
    three = min(4.0 / min(R, cap), cap ** (-1.0 / 3.0), (4.0 - eps) / math.sqrt(cap))
    return {"c0": c0 * n / math.sqrt(cap), "three_case": n * three,
            "lattice": n * 4.0 * (math.sqrt(cap) - 1.0) / cap}


def certificate_lower_bound(n: int, cap: int, eps: float = 0.1, R: float | None = None,
                            c0: float = C0) -> float:
    """Configuration-free lower bound on n * Phi_n (since |C cap vol| <= vol)."""
    return max(certificate_terms(n, cap, eps, R, c0).values())


# ---------------------------------------------------------------- parametric test

def _walk_vertices(states: np.ndarray, n: int) -> list[Point]:
    L = 2 * n + 1
    return [(int((s // 4) // L) - n, int((s // 4) % L) - n) for s in states]


def _simple_loops(walk: list[Point]) -> list[list[Point]]:
    """Split a closed vertex walk into simple loops at repeated vertices."""
    loops = []
    stack: list[Point] = []
    where: dict[Point, int] = {}
    for v in walk + walk[:1]:
        if v in where:
            k = where[v]
            loop = stack[k:]
            for u in loop[1:]:
                del where[u]
            del stack[k + 1:]
            if len(loop) >= 4:
                loops.append(loop)
        else:
            where[v] = len(stack)
            stack.append(v)
    return loops


def _loop_circuits(states: np.ndarray, n: int) -> list[Circuit]:
    out = []
    for loop in _simple_loops(_walk_vertices(states, n)):
        try:
            out.append(Circuit.from_points(loop))
        except ValueError:
            continue
    return out


def parametric_witness(config: Configuration, t: float, mask: np.ndarray):
    """A simple circuit with |g| / (strict interior marked count) < t, or None.

    Returns (found_negative_cycle, circuit, ratio).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    t = float(t)
    m = mask.astype(np.float64)
    states = negative_cycle(config.horizontal, config.vertical, mask, t * _prefix(mask), t * m,
                            np.zeros_like(m), 1.0)
    if states.size == 0:
        return False, None, math.inf
    marks = giant_marks(config.n, mask)
    best, best_ratio = None, math.inf
    for c in _loop_circuits(states, config.n):
        inner = strict_interior_count(c, marks)
        if inner > 0 and c.length < t * inner and c.length / inner < best_ratio:
            best, best_ratio = c, c.length / inner
    return True, best, best_ratio


def parametric_ratio_test(config: Configuration, t: float, mask: np.ndarray | None = None) -> bool:
    """Whether some open circuit in the giant has |g| / (strict interior count) < t.

    Negative cycles of the turn-aware edge graph are split into simple loops;
    the test is true only when one of them is an actual witness.
    """
    if mask is None:
        lab = label_clusters(config)
        mask = lab.labels == lab.largest()
    return parametric_witness(config, t, mask)[1] is not None


def parametric_threshold(config: Configuration, mask: np.ndarray | None = None, rel_tol: float = 1e-6,
                         lo: float = 0.0):
    """Binary search for the uncapped strict-interior ratio minimum.

    The upper end is always the ratio of an explicit witness, so the returned
    value is attained.  Returns (ratio, circuit) or (inf, None).
    """
    if mask is None:
        lab = label_clusters(config)
        mask = lab.labels == lab.largest()
    n_edges = int(config.horizontal.sum() + config.vertical.sum())
    _, witness, hi = parametric_witness(config, 4.0 * (n_edges + 1) ** 2, mask)
    if witness is None:
        return math.inf, None
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        _, w, r = parametric_witness(config, mid, mask)
        if w is None:
            lo = mid
        else:
            witness, hi = w, r
    return hi, witness


def lagrangian_search(config: Configuration, mask: np.ndarray, cap: int, start: float,
                      fractions: Sequence[float] = (0.0, 0.03, 0.1, 0.2, 0.35, 0.5),
                      max_rounds: int = 40) -> Circuit | None:
    """Dinkelbach descent on |g| - t |C cap vol(g)| + lam vol(g) over negative cycles.

    For each penalty lam = f t, negative cycles of the edge graph are split
    into simple loops; any loop within the cap whose exact ratio beats t
    becomes the new incumbent.  Returns the best circuit found, or None.
    """
    n = config.n
    marks = giant_marks(n, mask)
    m = mask.astype(np.float64)
    best, t = None, start
    for f in fractions:
        for _ in range(max_rounds):
            lam = f * t
            w = t * m - lam
            wprefix = np.zeros((w.shape[0] + 1, w.shape[1]))
            np.cumsum(w, axis=0, out=wprefix[1:])
            states = negative_cycle(config.horizontal, config.vertical, mask, wprefix, w, -t * m, 1.0 + lam)
            if states.size == 0:
                break
            improved = False
            for c in _loop_circuits(states, n):
                if vol(c) > cap:
                    continue
                L, cnt = circuit_ratio(c, marks)
                if cnt > 0 and L < t * cnt:
                    best, t, improved = c, L / cnt, True
            if not improved:
                break
    return best


# ---------------------------------------------------------------- guided circuits

@dataclass(frozen=True)
class GuidedCircuit:
    circuit: Circuit
    ratio: float
    length: int
    count: int
    within_distance: bool | None = None
    within_length: bool | None = None


def trace_target(config: Configuration, index: ClosestVertexIndex, target: PolyCurve, r: float,
                 marks: Marks, cap: int) -> GuidedCircuit | None:
    """Closest giant vertices along P_r(target), joined by geodesics and closed into a circuit."""
    pts = polygonal_approx(target, r).points
    way: list[Point] = []
    for q in pts:
        v = closest_vertex(index, q)
        if not way or way[-1] != v:
            way.append(v)
    if len(way) > 1 and way[-1] == way[0]:
        way.pop()
    if len(set(way)) < 3:
        return None
    path = [way[0]]
    for a, b in zip(way, way[1:]):
        path = concatenate(path, geodesic(config, a, b))
    back = geodesic(config, way[-1], way[0])
    if len(path) < 2:
        return None
    circuit = close_path(path, back)
    if circuit is None or vol(circuit) > cap:
        return None
    length, count = circuit_ratio(circuit, marks)
    return GuidedCircuit(circuit, length / count, length, count)


def _guided_spacing(N: float, eps: float, spacing: float | None) -> float:
    r = eps * eps * N / 8.0
    return r if spacing is None else max(r, spacing)


def wulff_guided_circuit(config: Configuration, wulff: WulffShape, eps: float, norm, *,
                         labeling: ClusterLabeling | None = None, kappa: float | None = None,
                         cap: int | None = None, spacing: float | None = None,
                         index: ClosestVertexIndex | None = None,
                         giant_label: int | None = None) -> GuidedCircuit | None:
    """Circuit tracing the dilated Wulff curve N W^ with N = (1 - eps) sqrt(2) n.

    Breakpoints are the r-polygonal approximation with r = eps^2 N / 8 (or
    ``spacing`` when that is larger).  The result reports whether it stays
    within eps^2 N of the dilated polygon and whether its length is at most
    (1 + eps) N len(P_r).
    """
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    n = config.n
    if giant_label is None:
        labeling, report = uniq_report(config, kappa, labeling)
        if not report.uniq_event_holds:
            raise ValueError("no giant cluster: uniqueness event fails")
        giant_label = report.giant_label
    mask = labeling.labels == giant_label
    if index is None:
        index = ClosestVertexIndex.build(config, labeling, giant_label)
    cap = default_cap(n) if cap is None else cap
    N = (1.0 - eps) * math.sqrt(2.0) * n
    r = _guided_spacing(N, eps, spacing)
    target = PolyCurve(np.vstack([wulff.normalized, wulff.normalized[:1]]) * N, True)
    got = trace_target(config, index, target, r, giant_marks(n, mask), cap)
    if got is None:
        return None
    poly = polygonal_approx(target, r)
    from scipy.spatial import cKDTree

    dense = poly.sample(min(0.25, eps * eps * N / 4))
    dist, _ = cKDTree(dense).query(np.array(got.circuit.vertices, float), p=np.inf)
    within = bool(dist.max() <= eps * eps * N + 0.25)
    short = got.length <= (1.0 + eps) * len_norm(poly, norm)
    return replace(got, within_distance=within, within_length=bool(short))


# ---------------------------------------------------------------- local search

def _segment_terms(prev: Point, pts: Sequence[Point], nxt: Point, marks: Marks):
    """Green sum, twice-area and boundary terms of a run of circuit vertices."""
    green = area2 = bnd = 0
    k = len(pts)
    for a in range(k):
        u = pts[a]
        w = pts[a + 1] if a + 1 < k else None
        if w is not None:
            area2 += u[0] * w[1] - w[0] * u[1]
            if w[0] == u[0]:
                green += marks.count_left_of(u[0], u[1]) if w[1] > u[1] else -marks.count_left_of(u[0], w[1])
        if marks.at(*u):
            before = pts[a - 1] if a > 0 else prev
            after = w if w is not None else nxt
            d_in = (u[0] - before[0], u[1] - before[1])
            d_out = (after[0] - u[0], after[1] - u[1])
            bnd += 0 if _ne_cell_inside(d_in, d_out) else 1
    return green, area2, bnd


class _Walker:
    """Mutable circuit with exact length, volume and marked-count bookkeeping."""

    def __init__(self, circuit: Circuit, marks: Marks):
        self.pts = list(circuit.vertices)
        self.marks = marks
        self.length = circuit.length
        self.area2 = circuit.twice_area
        self.count = weighted_interior_count(circuit, marks)

    def vol(self, area2: int, length: int) -> int:
        return (area2 - length + 2) // 2 + length

    def delta(self, i: int, j: int, new_inner: list[Point]):
        """Effect of replacing the vertices strictly between positions i and j."""
        k = len(self.pts)
        span = (j - i) % k
        old = [self.pts[(i + s) % k] for s in range(span + 1)]
        new = [old[0]] + new_inner + [old[-1]]
        prev = self.pts[(i - 1) % k]
        nxt = self.pts[(j + 1) % k]
        g0, a0, b0 = _segment_terms(prev, old, nxt, self.marks)
        g1, a1, b1 = _segment_terms(prev, new, nxt, self.marks)
        return len(new) - len(old), a1 - a0, (g1 + b1) - (g0 + b0)

    def apply(self, i: int, j: int, new_inner: list[Point], dl: int, da: int, dc: int) -> None:
        if j <= i:
            raise ValueError("span wraps around the start")
        self.pts = self.pts[:i + 1] + new_inner + self.pts[j:]
        self.length += dl
        self.area2 += da
        self.count += dc

    def circuit(self) -> Circuit:
        return Circuit(tuple(self.pts))


def _moves(w: _Walker, config: Configuration, mask: np.ndarray, max_short: int = 9):
    """Candidate replacements (i, j, new_inner) keeping the circuit simple and open."""
    n = config.n
    pts = w.pts
    k = len(pts)
    on = {p: a for a, p in enumerate(pts)}

    def ok_vertex(p: Point) -> bool:
        return max(abs(p[0]), abs(p[1])) <= n and p not in on and bool(mask[p[0] + n, p[1] + n])

    def open_edge(a: Point, b: Point) -> bool:
        return max(abs(a[0]), abs(a[1]), abs(b[0]), abs(b[1])) <= n and config.is_open((a, b))

    for i in range(k):
        a = pts[i]
        # shortcuts across small pockets
        for s in range(3, min(max_short, k - 3) + 1, 2):
            b = pts[(i + s) % k]
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 and open_edge(a, b):
                yield i, (i + s) % k, []
        # corner flips
        c = pts[(i + 1) % k]
        b = pts[(i + 2) % k]
        if abs(a[0] - b[0]) == 1 and abs(a[1] - b[1]) == 1:
            q = (a[0] + b[0] - c[0], a[1] + b[1] - c[1])
            if ok_vertex(q) and open_edge(a, q) and open_edge(q, b):
                yield i, (i + 2) % k, [q]
    # push straight runs outward by one
    for i in range(k):
        a, b = pts[i], pts[(i + 1) % k]
        d = (b[0] - a[0], b[1] - a[1])
        out = (d[1], -d[0])
        first = (a[0] + out[0], a[1] + out[1])
        if not (ok_vertex(first) and open_edge(a, first)):
            continue
        inner = [first]
        for s in range(1, k // 2):
            u, prev = pts[(i + s) % k], pts[(i + s - 1) % k]
            if (u[0] - prev[0], u[1] - prev[1]) != d:
                break
            q = (u[0] + out[0], u[1] + out[1])
            if not (ok_vertex(q) and open_edge(inner[-1], q)):
                break
            inner.append(q)
            if open_edge(q, u):
                yield i, (i + s) % k, list(inner)


def local_search_improve(config: Configuration, circuit: Circuit, budget: int, *,
                         mask: np.ndarray | None = None, cap: int | None = None) -> Circuit:
    """Greedy exact-ratio descent over shortcut, corner-flip and push moves.

    Every accepted move strictly lowers |g| / |C cap vol(g)| on its own and keeps
    the circuit simple, open, inside the giant and within the volume cap.
    Each sweep applies a batch of improving moves whose spans are two or more
    positions apart, so their effects add up exactly.  ``budget`` bounds the
    number of accepted moves; the input is returned unchanged when none helps.
    """
    if budget <= 0:
        return circuit
    n = config.n
    if mask is None:
        lab = label_clusters(config)
        mask = lab.labels == lab.largest()
    cap = default_cap(n) if cap is None else cap
    marks = giant_marks(n, mask)
    w = _Walker(circuit, marks)
    accepted = 0
    stale = 0
    while accepted < budget and stale < 2:
        k = len(w.pts)
        # spans may not wrap past position 0, so rotate the start by half a turn each sweep
        shift = k // 2
        w.pts = w.pts[shift:] + w.pts[:shift]
        picked = []
        used = np.zeros(k, bool)
        added: set[Point] = set()
        L0, C0_, A0 = w.length, w.count, w.area2
        dl_sum = da_sum = dc_sum = 0
        for i, j, inner in _moves(w, config, mask):
            if j <= i or i == 0 or j == k - 1:
                continue
            # a move gains at most len(inner) marked points
            grow = len(inner) - (j - i - 1)
            if grow > 0 and grow * C0_ >= len(inner) * L0:
                continue
            # only pushes grow the circuit, and a push adds exactly len(inner) points to vol
            if grow > 0 and w.vol(A0 + da_sum, L0 + dl_sum) + len(inner) > cap:
                continue
            span = list(range(i - 1, j + 2))
            if used[span].any() or added.intersection(inner):
                continue
            dl, da, dc = w.delta(i, j, inner)
            if dl * C0_ >= dc * L0:
                continue
            length, count = L0 + dl_sum + dl, C0_ + dc_sum + dc
            area2 = A0 + da_sum + da
            if length < 4 or count <= 0 or area2 <= 0 or w.vol(area2, length) > cap:
                continue
            picked.append((i, j, inner, dl, da, dc))
            used[span] = True
            added.update(inner)
            dl_sum, da_sum, dc_sum = dl_sum + dl, da_sum + da, dc_sum + dc
            if accepted + len(picked) >= budget:
                break
        if not picked:
            stale += 1
            continue
        stale = 0
        # apply from the end so earlier positions stay valid
        for i, j, inner, dl, da, dc in sorted(picked, key=lambda m: -m[0]):
            w.apply(i, j, inner, dl, da, dc)
        accepted += len(picked)
    if accepted == 0:
        return circuit
    out = w.circuit()
    if (out.length, weighted_interior_count(out, marks)) != (w.length, w.count):
        raise AssertionError("local search bookkeeping drifted")
    return out


# ---------------------------------------------------------------- candidates

def square_candidates(config: Configuration, mask: np.ndarray, cap: int) -> list[Circuit]:
    """Open boundaries of centred squares of every admissible size."""
    n = config.n
    out = []
    for m in range(1, n + 1):
        c = square_circuit(m)
        if vol(c) <= cap and check_witness(config, c, mask, cap):
            out.append(c)
    return out


def _rectangle_targets(n: int, count: int) -> list[PolyCurve]:
    """Centred rectangles with aspect ratios up to 2 and about half the box area."""
    out = []
    side = math.sqrt(2.0) * n
    for a in np.linspace(-0.35, 0.35, count):
        w, h = side * math.exp(a), side * math.exp(-a)
        for s in (0.96, 0.88):
            x, y = min(s * w / 2, n - 1), min(s * h / 2, n - 1)
            out.append(PolyCurve(np.array([(-x, -y), (x, -y), (x, y), (-x, y), (-x, -y)]), True))
    return out


def _strip_targets(n: int, divisions: int) -> list[PolyCurve]:
    """Full-width and full-height bands spanning one or two cells of a coarse grid."""
    if divisions < 1:
        return []
    lines = np.linspace(-n, n, divisions + 1)
    out = []
    for span in (1, 2):
        for a in range(divisions + 1 - span):
            lo, hi = lines[a] + 1, lines[a + span] - 1
            if hi - lo < 2:
                continue
            for x, y in (((-n + 1, n - 1), (lo, hi)), ((lo, hi), (-n + 1, n - 1))):
                out.append(PolyCurve(np.array([(x[0], y[0]), (x[1], y[0]), (x[1], y[1]),
                                               (x[0], y[1]), (x[0], y[0])]), True))
    return out


def phi(config: Configuration, solver: SolverConfig | None = None, *,
        labeling: ClusterLabeling | None = None) -> PhiResult:
    """Bracket Phi_n on one configuration.

    The upper bound is the best exact ratio among open square boundaries,
    Wulff-guided circuits, rectangle-guided circuits and their local-search
    refinements; the lower bound combines the configuration-free certificate
    with the parametric threshold on small boxes.
    """
    solver = solver or SolverConfig()
    n = config.n
    spec = config.spec
    cap = default_cap(n) if solver.cap is None else solver.cap
    strategy = solver.strategy or ("bruteforce" if n <= 4 else "candidates")
    if strategy == "bruteforce" and n > 4:
        raise ValueError("exhaustive search is limited to n <= 4")
    labeling, giant, event = _giant(config, labeling, solver.kappa, solver.require_event)
    if giant is None:
        return PhiResult(n, spec.p, spec.master_seed, config.sample_index, math.nan, math.nan, None,
                         ("event-failed",), cap, event_failed=True)
    mask = labeling.labels == giant
    if strategy == "bruteforce":
        sizes = labeling.sizes
        if np.count_nonzero(sizes == sizes[giant]) > 1:
            raise ValueError("no unique largest cluster")
        return brute_force_phi(config, cap, labeling=labeling)

    marks = giant_marks(n, mask)
    cert = certificate_lower_bound(n, cap) / n if cap >= 4 else 0.0
    lb, methods = cert, ["certificate"]
    if strategy == "parametric" and n <= max(solver.parametric_max_n, 4):
        t_star, _ = parametric_threshold(config, mask)
        if math.isfinite(t_star) and t_star / (1 + t_star) > lb:
            lb = t_star / (1 + t_star)
            methods = ["parametric"]

    cands: list[tuple[Circuit, str]] = [(c, "square") for c in square_candidates(config, mask, cap)]
    index = ClosestVertexIndex.build(config, labeling, giant)
    norm = solver.norm or NormModel.l1()
    wulff = wulff_shape(norm, solver.K)
    spacings = [solver.spacing] if solver.spacing is not None else [f * n for f in solver.spacing_fractions]
    for sp in spacings:
        for eps in solver.eps:
            g = wulff_guided_circuit(config, wulff, eps, norm, labeling=labeling, cap=cap,
                                     spacing=sp, index=index, giant_label=giant)
            if g is not None:
                cands.append((g.circuit, "wulff"))
        for target in _rectangle_targets(n, solver.rectangles):
            g = trace_target(config, index, target, max(sp, 1.0), marks, cap)
            if g is not None:
                cands.append((g.circuit, "rectangle"))
    for target in _strip_targets(n, solver.strips):
        g = trace_target(config, index, target, max(n / 8, 1.0), marks, cap)
        if g is not None:
            cands.append((g.circuit, "strip"))

    best = None
    seen = set()
    for c, tag in cands:
        if c.vertices in seen:
            continue
        seen.add(c.vertices)
        L, cnt = circuit_ratio(c, marks)
        key = (L / cnt, c.canonical().vertices)
        if best is None or key < best[0]:
            best = (key, c, tag)
    if best is None:
        return PhiResult(n, spec.p, spec.master_seed, config.sample_index, lb, math.inf, None,
                         tuple(methods + ["no-candidate"]), cap)
    witness, tag = best[1], best[2]
    if n <= solver.lagrangian_max_n:
        better = lagrangian_search(config, mask, cap, best[0][0])
        if better is not None:
            witness, tag = better, "lagrangian"
    if solver.local_search_budget:
        improved = local_search_improve(config, witness, solver.local_search_budget, mask=mask, cap=cap)
        if improved is not witness:
            witness, tag = improved, tag + "+local"
    witness = witness.canonical()
    L, cnt = circuit_ratio(witness, marks)
    ub = L / cnt
    if not check_witness(config, witness, mask, cap):
        raise AssertionError("invalid witness")
    # configuration-free floor, checked exactly on every witness
    if n * L / vol(witness) < cert * n * (1 - 1e-12):
        raise AssertionError("witness below the certificate floor")
    if lb > ub:
        raise AssertionError(f"lower bound {lb} exceeds upper bound {ub}")
    return PhiResult(n, spec.p, spec.master_seed, config.sample_index, lb, ub, witness,
                     tuple(methods + [tag]), cap, vol(witness), cnt)
