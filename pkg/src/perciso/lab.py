"""Experiment orchestration: tail probabilities, planted events, density statistics,
rate fits and on-disk reports."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import _hash
from ._constants import C0
from ._kernels import rect_density_scan
from .geometry import Circuit, square_circuit, vol
from .isosolver import (PhiResult, SolverConfig, certificate_lower_bound, circuit_ratio,
                        giant_marks, phi)
from .percolation import (Configuration, GridSpec, force_edges, sample_configuration,
                          theta_reference, uniq_report)

KINDS = ("tail", "barrier", "annulus", "density", "lln")
CSV_VERSION = 1

PhiFn = Callable[..., PhiResult]


def _json_cell(v):
    """CSV cell (exact repr strings) back to a JSON number where possible."""
    if not isinstance(v, str):
        return v
    try:
        return _num(float(v))
    except ValueError:
        return v


def _json_rows(columns: Sequence[str], rows: Iterable[Sequence]) -> list[dict]:
    return [{c: _json_cell(v) for c, v in zip(columns, r)} for r in rows]


def _num(x: float):
    if x is None or isinstance(x, (int, str)):
        return x
    if math.isnan(x):
        return None
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment.  ``samples`` is a single count or one count per n."""

    kind: str
    n: tuple[int, ...]
    p: float
    thresholds: tuple[float, ...] = ()
    samples: int | tuple[int, ...] = 20
    kappa: float | None = None
    delta: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if not isinstance(self.samples, int):
            object.__setattr__(self, "samples", tuple(int(s) for s in self.samples))
            if len(self.samples) != len(self.n):
                raise ValueError("one sample count per n is required")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.n or any(x < 1 for x in self.n):
            raise ValueError("n values must be >= 1")
        GridSpec(self.n[0], self.p)
        counts = (self.samples,) if isinstance(self.samples, int) else self.samples
        if any(s < 1 for s in counts):
            raise ValueError("sample counts must be >= 1")
        if any(t <= 0 for t in self.thresholds):
            raise ValueError("thresholds must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    def samples_for(self, n: int) -> int:
        if isinstance(self.samples, int):
            return self.samples
        return self.samples[self.n.index(n)]

    def grid(self, n: int) -> GridSpec:
        return GridSpec(n, self.p, _hash.derive_seed(self.seed, n))

    def to_json(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d["thresholds"] = list(self.thresholds)
        d["samples"] = self.samples if isinstance(self.samples, int) else list(self.samples)
        return d

    @classmethod
    def from_json(cls, data: dict | str) -> "ExperimentSpec":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(**data)

    @property
    def spec_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(successes, trials).proportion_ci(0.95, method="wilson")
    return max(0.0, float(ci.low)), min(1.0, float(ci.high))


# ---------------------------------------------------------------- tails

@dataclass(frozen=True)
class TailCell:
    n: int
    t: float
    trials: int
    lower: int
    upper: int
    ambiguous: int
    event_failures: int

    def __post_init__(self) -> None:
        if not (0 <= self.lower <= self.trials and 0 <= self.upper <= self.trials):
            raise ValueError("successes exceed trials")

    @property
    def p_lower(self) -> float:
        return self.lower / self.trials

    @property
    def p_upper(self) -> float:
        return self.upper / self.trials

    def ci_lower(self) -> tuple[float, float]:
        return wilson_interval(self.lower, self.trials)

    def ci_upper(self) -> tuple[float, float]:
        return wilson_interval(self.upper, self.trials)


TAIL_COLUMNS = ["n", "t", "trials", "lower", "upper", "ambiguous", "event_failures",
                "p_lower", "ci_lower_lo", "ci_lower_hi", "p_upper", "ci_upper_lo", "ci_upper_hi"]


@dataclass(frozen=True)
class TailEstimate:
    spec: ExperimentSpec
    cells: tuple[TailCell, ...]
    results: tuple[PhiResult, ...] = field(default=(), repr=False)

    def cell(self, n: int, t: float) -> TailCell:
        for c in self.cells:
            if c.n == n and c.t == t:
                return c
        raise KeyError((n, t))

    def rows(self) -> list[list]:
        out = []
        for c in self.cells:
            lo = c.ci_lower()
            up = c.ci_upper()
            out.append([c.n, repr(c.t), c.trials, c.lower, c.upper, c.ambiguous, c.event_failures,
                        repr(c.p_lower), repr(lo[0]), repr(lo[1]), repr(c.p_upper), repr(up[0]), repr(up[1])])
        return out

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, TAIL_COLUMNS, self.rows())

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "spec_hash": self.spec.spec_hash,
                "cells": _json_rows(TAIL_COLUMNS, self.rows())}


def _run_phi(phi_fn: PhiFn | None, config: Configuration, solver: SolverConfig | None, labeling):
    if phi_fn is None:
        return phi(config, solver, labeling=labeling)
    return phi_fn(config)


def assert_floor(result: PhiResult) -> None:
    """Every witness must sit above the configuration-free certificate."""
    w = result.witness
    if w is None or result.cap < 4:
        return
    n = result.n
    if n * w.length / vol(w) < certificate_lower_bound(n, result.cap) * (1 - 1e-12):
        raise AssertionError(f"witness violates the certificate floor at n={n}")


def tail_experiment(spec: ExperimentSpec, solver: SolverConfig | None = None,
                    phi_fn: PhiFn | None = None, progress: Callable[[str], None] | None = None
                    ) -> TailEstimate:
    """Conditional tail frequencies of n Phi_n given the uniqueness event.

    A sample counts toward the lower tail at t only when n UB <= t, and toward
    the upper tail only when n LB >= t; the rest are tallied as ambiguous.
    Samples outside the event are counted separately and never enter trials.
    """
    if not spec.thresholds:
        raise ValueError("tail experiment needs thresholds")
    solver = solver or SolverConfig(kappa=spec.kappa)
    cells, results = [], []
    for n in spec.n:
        grid = spec.grid(n)
        got, failures = [], 0
        for k in range(spec.samples_for(n)):
            config = sample_configuration(grid, k)
            labeling, report = uniq_report(config, spec.kappa)
            if not report.uniq_event_holds:
                failures += 1
                continue
            r = _run_phi(phi_fn, config, solver, labeling)
            assert_floor(r)
            got.append(r)
        if not got:
            raise ValueError(f"no samples satisfy the uniqueness event at n={n}")
        for t in spec.thresholds:
            lower = sum(n * r.upper_bound <= t for r in got)
            upper = sum(n * r.lower_bound >= t for r in got)
            cells.append(TailCell(n, t, len(got), lower, upper, len(got) - lower - upper, failures))
        results.extend(got)
        if progress:
            progress(f"tail n={n}: {len(got)} trials, {failures} event failures")
    return TailEstimate(spec, tuple(cells), tuple(results))


def log_prob_per_n(estimate: TailEstimate, t: float, tail: str = "lower") -> list[tuple[int, float]]:
    """(n, log(p_hat)/n) for one threshold; log 0 is -inf."""
    out = []
    for c in estimate.cells:
        if c.t != t:
            continue
        p = c.p_lower if tail == "lower" else c.p_upper
        out.append((c.n, math.log(p) / c.n if p > 0 else -math.inf))
    return sorted(out)


# ---------------------------------------------------------------- rate fits

@dataclass(frozen=True)
class RateFitRow:
    t: float
    ns: tuple[int, ...]
    probs: tuple[float, ...]
    slope_n: float
    slope_n2: float
    residual_n: float
    residual_n2: float
    classification: str


@dataclass(frozen=True)
class RateFit:
    rows: tuple[RateFitRow, ...]

    def row(self, t: float) -> RateFitRow:
        for r in self.rows:
            if r.t == t:
                return r
        raise KeyError(t)


def _normalized_residual(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope and residual sum of squares over total sum of squares."""
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    tss = float(np.sum((y - y.mean()) ** 2))
    rss = float(np.sum(res * res))
    return float(coef[0]), (rss / tss if tss > 0 else 0.0)


def fit_points(ns: Sequence[int], probs: Sequence[float], t: float = math.nan,
               margin: float = 2.0) -> RateFitRow:
    """Least-squares fits of log p against n and n^2.

    The order with the smaller normalized residual wins only when the other
    residual is more than ``margin`` times larger.
    """
    ns = tuple(int(x) for x in ns)
    probs = tuple(float(p) for p in probs)
    if len(set(ns)) < 3:
        raise ValueError("need at least three distinct n")
    if all(p in (0.0, 1.0) for p in probs):
        return RateFitRow(t, ns, probs, math.nan, math.nan, math.nan, math.nan, "degenerate")
    keep = [(x, p) for x, p in zip(ns, probs) if 0.0 < p < 1.0]
    if len({x for x, _ in keep}) < 3:
        return RateFitRow(t, ns, probs, math.nan, math.nan, math.nan, math.nan, "inconclusive")
    x = np.array([k[0] for k in keep], float)
    y = np.log([k[1] for k in keep])
    s1, r1 = _normalized_residual(x, y)
    s2, r2 = _normalized_residual(x * x, y)
    if r2 > margin * r1:
        cls = "surface"
    elif r1 > margin * r2:
        cls = "volume"
    else:
        cls = "inconclusive"
    return RateFitRow(t, ns, probs, s1, s2, r1, r2, cls)


def rate_fit(estimates: TailEstimate | Iterable[TailEstimate], tail: str = "lower") -> RateFit:
    if isinstance(estimates, TailEstimate):
        estimates = [estimates]
    by_t: dict[float, dict[int, float]] = {}
    for est in estimates:
        for c in est.cells:
            by_t.setdefault(c.t, {})[c.n] = c.p_lower if tail == "lower" else c.p_upper
    rows = []
    for t in sorted(by_t):
        pts = sorted(by_t[t].items())
        rows.append(fit_points([a for a, _ in pts], [b for _, b in pts], t))
    return RateFit(tuple(rows))


# ---------------------------------------------------------------- planted barrier

def barrier_parameters(t: float, c0: float = C0) -> tuple[int, float, float]:
    """(k, tau, zeta): zeta = c0^2/t^2, the least k with 2 c0 sqrt(k) > t,
    and tau just below c0 zeta / (16 sqrt(k))."""
    if t <= 0:
        raise ValueError("t must be positive")
    zeta = c0 * c0 / (t * t)
    k = max(1, math.floor((t / (2 * c0)) ** 2) + 1)
    tau = 0.999 * c0 * zeta / (16 * math.sqrt(k))
    return k, tau, zeta


def barrier_edges(n: int, k: int, tau: float) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Vertical edges (x, y)-(x, y+1) with x in [-n, n - floor(tau n)] and
    y = i floor(n/k), for |i| < k."""
    cut = math.floor(tau * n)
    if cut < 1:
        raise ValueError(f"floor(tau n) = {cut} < 1: barrier has no gap at n={n}")
    step = n // k
    if step < 1:
        raise ValueError("k exceeds n")
    edges = []
    for i in range(-k + 1, k):
        y = i * step
        for x in range(-n, n - cut + 1):
            edges.append(((x, y), (x, y + 1)))
    return edges


@dataclass(frozen=True)
class PlantCell:
    n: int
    barrier_size: int
    log_prob: float
    k: int
    tau: float
    zeta: float
    planted: tuple[float, ...]
    unplanted: tuple[float, ...]
    planted_lb: tuple[float, ...]
    planted_event_failures: int
    unplanted_event_failures: int
    all_closed: bool

    @property
    def median_planted(self) -> float:
        return statistics.median(self.planted) if self.planted else math.nan

    @property
    def median_unplanted(self) -> float:
        return statistics.median(self.unplanted) if self.unplanted else math.nan


@dataclass(frozen=True)
class BarrierReport:
    spec: ExperimentSpec
    t_target: float
    cells: tuple[PlantCell, ...]

    def fraction_above(self, n: int) -> tuple[float, float]:
        """Fractions of planted samples with every witness, resp. the lower bound, at or above t."""
        c = next(c for c in self.cells if c.n == n)
        if not c.planted:
            return math.nan, math.nan
        m = len(c.planted)
        return (sum(x >= self.t_target for x in c.planted) / m,
                sum(x >= self.t_target for x in c.planted_lb) / m)

    def rows(self) -> list[list]:
        out = []
        for c in self.cells:
            fw, fl = self.fraction_above(c.n)
            out.append([c.n, c.k, repr(c.tau), repr(c.zeta), c.barrier_size, repr(c.log_prob),
                        len(c.planted), c.planted_event_failures, len(c.unplanted), c.unplanted_event_failures,
                        repr(c.median_planted), repr(c.median_unplanted), repr(fw), repr(fl), int(c.all_closed)])
        return out

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, BARRIER_COLUMNS, self.rows())

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "spec_hash": self.spec.spec_hash, "t_target": self.t_target,
                "cells": _json_rows(BARRIER_COLUMNS, self.rows())}


BARRIER_COLUMNS = ["n", "k", "tau", "zeta", "barrier_size", "log_prob", "planted_trials",
                   "planted_event_failures", "unplanted_trials", "unplanted_event_failures",
                   "median_planted", "median_unplanted", "frac_witness_above", "frac_lb_above", "all_closed"]


def plant_barrier_experiment(spec: ExperimentSpec, t_target: float, solver: SolverConfig | None = None,
                             phi_fn: PhiFn | None = None) -> BarrierReport:
    """Close the barrier edges in every sample and compare n UB with the unplanted sample."""
    k, tau, zeta = barrier_parameters(t_target)
    solver = solver or SolverConfig(kappa=spec.kappa, strips=6)
    cells = []
    for n in spec.n:
        edges = barrier_edges(n, k, tau)
        grid = spec.grid(n)
        planted, unplanted, lbs = [], [], []
        pf = uf = 0
        closed = True
        for s in range(spec.samples_for(n)):
            base = sample_configuration(grid, s)
            forced = force_edges(base, edges, False)
            closed &= not any(forced.is_open(e) for e in edges)
            for config, out, is_planted in ((base, unplanted, False), (forced, planted, True)):
                labeling, report = uniq_report(config, spec.kappa)
                if not report.uniq_event_holds:
                    if is_planted:
                        pf += 1
                    else:
                        uf += 1
                    continue
                r = _run_phi(phi_fn, config, solver, labeling)
                assert_floor(r)
                out.append(n * r.upper_bound)
                if is_planted:
                    lbs.append(n * r.lower_bound)
        size = len(edges)
        log_prob = size * math.log1p(-spec.p) if spec.p < 1 else -math.inf
        cells.append(PlantCell(n, size, log_prob, k, tau, zeta, tuple(planted), tuple(unplanted),
                               tuple(lbs), pf, uf, closed))
    return BarrierReport(spec, t_target, tuple(cells))


# ---------------------------------------------------------------- planted annulus

def annulus_edges(n: int, m: int) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Edges of B(n) with at least one endpoint on the boundary of B(m)."""
    edges = set()
    for x in range(-m, m + 1):
        for y in range(-m, m + 1):
            if max(abs(x), abs(y)) != m:
                continue
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = (x, y), (x + dx, y + dy)
                if max(abs(b[0]), abs(b[1])) <= n:
                    edges.add((min(a, b), max(a, b)))
    return sorted(edges)


@dataclass(frozen=True)
class AnnulusCell:
    n: int
    m: int
    edge_count: int
    log_prob: float
    ratios: tuple[float, ...]
    event_failures: int
    outside_giant: int
    all_open: bool
    theta_hat: float
    target: float

    @property
    def mean_ratio(self) -> float:
        return statistics.fmean(self.ratios) if self.ratios else math.nan


ANNULUS_COLUMNS = ["n", "m", "edge_count", "log_prob", "trials", "event_failures", "outside_giant",
                   "mean_ratio", "theta_hat", "target", "all_open"]


@dataclass(frozen=True)
class AnnulusReport:
    spec: ExperimentSpec
    eps: float
    cells: tuple[AnnulusCell, ...]

    def rows(self) -> list[list]:
        return [[c.n, c.m, c.edge_count, repr(c.log_prob), len(c.ratios), c.event_failures, c.outside_giant,
                 repr(c.mean_ratio), repr(c.theta_hat), repr(c.target), int(c.all_open)] for c in self.cells]

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, ANNULUS_COLUMNS, self.rows())

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "spec_hash": self.spec.spec_hash, "eps": self.eps,
                "cells": _json_rows(ANNULUS_COLUMNS, self.rows())}


def plant_annulus_experiment(spec: ExperimentSpec, eps: float = 0.3) -> AnnulusReport:
    """Open every edge touching the square of radius floor(n/sqrt 2) and score that square."""
    theta = theta_reference(spec.p)
    cells = []
    for n in spec.n:
        if n < 8:
            raise ValueError("annulus experiment needs n >= 8")
        m = math.floor(n / math.sqrt(2))
        edges = annulus_edges(n, m)
        gamma = square_circuit(m)
        grid = spec.grid(n)
        ratios, failures, outside, opened = [], 0, 0, True
        for s in range(spec.samples_for(n)):
            config = force_edges(sample_configuration(grid, s), edges, True)
            opened &= all(config.is_open(e) for e in edges)
            labeling, report = uniq_report(config, spec.kappa)
            if not report.uniq_event_holds:
                failures += 1
                continue
            mask = labeling.labels == report.giant_label
            if not mask[m + n, m + n]:
                outside += 1
                continue
            L, cnt = circuit_ratio(gamma, giant_marks(n, mask))
            ratios.append(n * L / cnt)
        cells.append(AnnulusCell(n, m, len(edges), len(edges) * math.log(spec.p), tuple(ratios), failures,
                                 outside, opened, theta, 2 * math.sqrt(2) / theta + eps))
    return AnnulusReport(spec, eps, tuple(cells))


# ---------------------------------------------------------------- density

@dataclass(frozen=True)
class DensityRecord:
    source: str
    bbox: tuple[int, int, int, int]
    diameter: int
    length: int
    volume: int
    density: float


@dataclass(frozen=True)
class DensityStats:
    """Family maxima of giant-density deviations; lower bounds of the suprema
    over all circuits."""

    delta: float
    family: str
    theta: float
    s_plus: float
    s_minus: float
    plus_record: DensityRecord | None
    minus_record: DensityRecord | None
    evaluated: int
    records: tuple[DensityRecord, ...] = ()


def _admissible(n: int, delta: float, length: int, volume: int, diameter: int) -> bool:
    return diameter >= delta * n and n * length * delta <= volume


def density_stats(config: Configuration, delta: float = 0.1, theta: float | None = None, *,
                  rectangles: bool = True, circuits: Sequence[Circuit] = (),
                  kappa: float | None = None) -> DensityStats:
    """Largest excess and deficit of the giant's density inside circuit volumes.

    The family is every axis-aligned rectangle with corners on a grid of step
    ceil(delta^2 n) (when ``rectangles``) plus ``circuits``.  Only members with
    l1 diameter >= delta n and n|g|/vol(g) <= 1/delta count; deficits are
    restricted to members inside B((1 - delta) n).
    """
    n = config.n
    theta = theta_reference(config.spec.p) if theta is None else theta
    labeling, report = uniq_report(config, kappa)
    if not report.uniq_event_holds:
        raise ValueError("no giant cluster: uniqueness event fails")
    mask = labeling.labels == report.giant_label
    inner = math.floor((1 - delta) * n)
    best_p, best_m = -math.inf, -math.inf
    rec_p = rec_m = None
    evaluated = 0
    parts = []
    if rectangles:
        step = max(1, math.ceil(delta * delta * n))
        coords = np.array(sorted(set(range(-n, n + 1, step)) | {n}), np.int64)
        P = np.zeros((2 * n + 2, 2 * n + 2), np.int64)
        P[1:, 1:] = mask.cumsum(0).cumsum(1)
        sp, rp, sm, rm, evaluated = rect_density_scan(P, coords, n, delta, theta, inner)

        def rect_record(r):
            x0, x1, y0, y1 = (int(v) for v in r)
            size = (x1 - x0 + 1) * (y1 - y0 + 1)
            cnt = int(mask[x0 + n:x1 + n + 1, y0 + n:y1 + n + 1].sum())
            return DensityRecord("rectangle", (x0, x1, y0, y1), x1 - x0 + y1 - y0,
                                 2 * (x1 - x0 + y1 - y0), size, cnt / size)

        if evaluated:
            best_p, rec_p = float(sp), rect_record(rp)
            if math.isfinite(sm):
                best_m, rec_m = float(sm), rect_record(rm)
        parts.append(f"rectangles(step={step})")
    records = []
    marks = giant_marks(n, mask)
    for c in circuits:
        x0, x1, y0, y1 = c.bbox()
        if max(-x0, x1, -y0, y1) > n:
            continue
        V = vol(c)
        if not _admissible(n, delta, c.length, V, c.l1_diameter()):
            continue
        _, cnt = circuit_ratio(c, marks)
        r = DensityRecord("circuit", (x0, x1, y0, y1), c.l1_diameter(), c.length, V, cnt / V)
        records.append(r)
        evaluated += 1
        if r.density - theta > best_p:
            best_p, rec_p = r.density - theta, r
        if max(-x0, x1, -y0, y1) <= inner and theta - r.density > best_m:
            best_m, rec_m = theta - r.density, r
    if circuits:
        parts.append(f"circuits({len(circuits)})")
    if evaluated == 0:
        raise ValueError("circuit family is empty after filtering")
    return DensityStats(delta, "+".join(parts), theta, best_p, best_m, rec_p, rec_m, evaluated, tuple(records))


@dataclass(frozen=True)
class DensityCell:
    n: int
    trials: int
    event_failures: int
    exceed_minus: int
    exceed_plus: int
    s_minus: tuple[float, ...]
    s_plus: tuple[float, ...]

    @property
    def p_minus(self) -> float:
        return self.exceed_minus / self.trials


DENSITY_COLUMNS = ["n", "trials", "event_failures", "exceed_minus", "p_minus", "ci_lo", "ci_hi",
                   "exceed_plus", "median_s_minus", "median_s_plus"]


@dataclass(frozen=True)
class DensityReport:
    spec: ExperimentSpec
    theta: float
    cells: tuple[DensityCell, ...]

    def rows(self) -> list[list]:
        out = []
        for c in self.cells:
            lo, hi = wilson_interval(c.exceed_minus, c.trials)
            out.append([c.n, c.trials, c.event_failures, c.exceed_minus, repr(c.p_minus), repr(lo), repr(hi),
                        c.exceed_plus, repr(statistics.median(c.s_minus)), repr(statistics.median(c.s_plus))])
        return out

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, DENSITY_COLUMNS, self.rows())

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "spec_hash": self.spec.spec_hash, "theta": self.theta,
                "cells": _json_rows(DENSITY_COLUMNS, self.rows())}


def density_experiment(spec: ExperimentSpec, solver: SolverConfig | None = None,
                       with_witnesses: bool = False) -> DensityReport:
    """Frequencies of s- >= delta and s+ >= delta across samples, per n."""
    theta = theta_reference(spec.p)
    cells = []
    for n in spec.n:
        grid = spec.grid(n)
        sm, sp, failures = [], [], 0
        for s in range(spec.samples_for(n)):
            config = sample_configuration(grid, s)
            labeling, report = uniq_report(config, spec.kappa)
            if not report.uniq_event_holds:
                failures += 1
                continue
            extra = ()
            if with_witnesses:
                r = phi(config, solver or SolverConfig(kappa=spec.kappa), labeling=labeling)
                extra = () if r.witness is None else (r.witness,)
            st = density_stats(config, spec.delta, theta, circuits=extra, kappa=spec.kappa)
            sm.append(st.s_minus)
            sp.append(st.s_plus)
        if not sm:
            raise ValueError(f"no samples satisfy the uniqueness event at n={n}")
        cells.append(DensityCell(n, len(sm), failures, sum(x >= spec.delta for x in sm),
                                 sum(x >= spec.delta for x in sp), tuple(sm), tuple(sp)))
    return DensityReport(spec, theta, tuple(cells))


# ---------------------------------------------------------------- persistence

PHI_COLUMNS = ["n", "p", "seed", "sample_index", "lb", "ub", "n_lb", "n_ub", "method", "cap", "vol",
               "interior_count", "event_failed"]


def phi_rows(results: Iterable[PhiResult]) -> list[list]:
    return [[r.n, repr(r.p), r.seed, r.sample_index, repr(r.lower_bound), repr(r.upper_bound),
             repr(r.n * r.lower_bound), repr(r.n * r.upper_bound), "+".join(r.method), r.cap,
             r.vol, r.interior_count, int(r.event_failed)] for r in results]


def _write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# perciso-csv v{CSV_VERSION}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: str | Path, data) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_num) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _savefig(fig, path: Path) -> None:
    import matplotlib.pyplot as plt

    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def report(out_dir: str | Path, *, tail: TailEstimate | None = None,
           phi_results: Sequence[PhiResult] = (), wulff=None, certificate: bool = True) -> list[Path]:
    """Write CSV tables, a JSON summary and SVG plots; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "perciso"
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc}") from exc
    written: list[Path] = []
    summary: dict = {}
    if tail is not None:
        p = out / "tail.csv"
        tail.to_csv(p)
        written.append(p)
        summary["tail"] = tail.to_json()
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        for t in tail.spec.thresholds:
            cells = [c for c in tail.cells if c.t == t and c.lower > 0]
            ns = np.array([c.n for c in cells], float)
            lp = [math.log(c.p_lower) for c in cells]
            axes[0].plot(ns, lp, "o-", label=f"t={t:g}")
            axes[1].plot(ns ** 2, lp, "o-", label=f"t={t:g}")
        axes[0].set_xlabel("n")
        axes[1].set_xlabel("n^2")
        axes[0].set_ylabel("log p_hat (lower tail)")
        axes[0].legend(fontsize=7)
        p = out / "tail_rates.svg"
        _savefig(fig, p)
        written.append(p)
    results = list(phi_results) or (list(tail.results) if tail is not None else [])
    if results:
        p = out / "phi.csv"
        _write_csv(p, PHI_COLUMNS, phi_rows(results))
        written.append(p)
        ns = sorted({r.n for r in results if not r.event_failed})
        med = lambda xs: statistics.median(xs) if xs else math.nan
        ub = [med([r.n * r.upper_bound for r in results if r.n == n and math.isfinite(r.upper_bound)])
              for n in ns]
        lb = [med([r.n * r.lower_bound for r in results if r.n == n and not r.event_failed]) for n in ns]
        summary["phi"] = {"n": ns, "median_n_ub": ub, "median_n_lb": lb}
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.fill_between(ns, lb, ub, alpha=0.25, label="LB-UB band")
        ax.plot(ns, ub, "o-", label="median n UB")
        ax.axhline(2 * math.sqrt(2), ls=":", c="k", label="2 sqrt 2")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("n")
        ax.set_ylabel("n Phi_n")
        ax.legend(fontsize=7)
        p = out / "phi_vs_n.svg"
        _savefig(fig, p)
        written.append(p)
    if wulff is not None:
        pts = np.vstack([wulff.normalized, wulff.normalized[:1]])
        summary["wulff"] = {"K": wulff.K, "area": wulff.area}
        fig, ax = plt.subplots(figsize=(4, 4))
        ax.plot(pts[:, 0], pts[:, 1], "-", label="normalized Wulff")
        sq = np.array([(-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)]) / 2
        ax.plot(sq[:, 0], sq[:, 1], ":", label="l1 limit")
        for r in results[:1]:
            if r.witness is not None:
                w = np.array(r.witness.vertices + r.witness.vertices[:1], float)
                s = math.sqrt(vol(r.witness))
                ax.plot(w[:, 0] / s, w[:, 1] / s, lw=0.7, label="witness / sqrt(vol)")
        ax.set_aspect("equal")
        ax.legend(fontsize=7)
        p = out / "wulff.svg"
        _savefig(fig, p)
        written.append(p)
    p = out / "summary.json"
    write_json(p, summary)
    written.append(p)
    return written
