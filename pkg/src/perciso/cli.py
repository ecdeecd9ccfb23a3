"""Command-line entry point: ``perciso <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

from . import lab
from .isosolver import SolverConfig, phi
from .metric import estimate_time_constant
from .percolation import (GridSpec, estimate_theta, sample_configuration,
                          save_configuration, uniq_report)
from .wulff import NormModel, estimate_norm_model, iso_constant, wulff_shape


def _seed(args) -> int:
    env = os.environ.get("PERCISO_SEED")
    return int(env) if env not in (None, "") else args.seed


def _emit(args, name: str, header: list[str], rows: list[list], summary: dict) -> None:
    """Write ``name``.csv/.json under --out, or print in the chosen format."""
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "csv":
            lab._write_csv(out / f"{name}.csv", header, rows)
        lab.write_json(out / f"{name}.json", summary)
        return
    if args.format == "json":
        json.dump(summary, sys.stdout, indent=2, sort_keys=True, default=lab._num)
        sys.stdout.write("\n")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())


def _spec(args, kind: str) -> lab.ExperimentSpec:
    return lab.ExperimentSpec(kind, tuple(args.n), args.p, tuple(args.t or ()), args.samples,
                              None, args.delta, _seed(args))


def cmd_sample(args) -> None:
    rows = []
    for n in args.n:
        spec = GridSpec(n, args.p, _seed(args))
        for k in range(args.samples):
            config = sample_configuration(spec, k)
            labeling, rep = uniq_report(config)
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                save_configuration(config, Path(args.out) / f"config_n{n}_{k}.bin")
            rows.append([n, k, config.open_count(), labeling.count, rep.giant_size, int(rep.uniq_event_holds)])
    header = ["n", "sample", "open_edges", "clusters", "giant_size", "uniq_event"]
    _emit(args, "samples", header, rows, {"rows": [dict(zip(header, r)) for r in rows]})


def cmd_theta(args) -> None:
    rows = []
    for n in args.n:
        theta, se = estimate_theta(args.p, n, args.samples, _seed(args))
        rows.append([n, repr(theta), repr(se)])
    header = ["n", "theta", "stderr"]
    _emit(args, "theta", header, rows, {"p": args.p, "rows": lab._json_rows(header, rows)})


def cmd_mu(args) -> None:
    est = estimate_time_constant(args.p, (1.0, 0.0), args.n, args.samples, seed=_seed(args))
    lo, hi = est.ci95()
    rows = [[r.L, r.samples, repr(r.mean_D), repr(r.stderr), r.dropped] for r in est.records]
    summary = {"p": args.p, "mu_hat": est.mu_hat, "stderr": est.stderr, "ci95": [lo, hi],
               "lengths": list(args.n)}
    _emit(args, "mu", ["L", "samples", "mean_D", "stderr", "dropped"], rows, summary)


def cmd_wulff(args) -> None:
    if args.p >= 1.0:
        norm = NormModel.l1()
    else:
        norm = estimate_norm_model(args.p, args.n, args.samples, seed=_seed(args))
    shape = wulff_shape(norm)
    iso = iso_constant(norm)
    rows = [[repr(float(x)), repr(float(y))] for x, y in shape.normalized]
    summary = {"p": args.p, "iso_constant": iso.value, "stderr": iso.stderr,
               "resolution_bound": iso.resolution_bound, "norm": norm.to_json(), "wulff": shape.to_json()}
    _emit(args, "wulff", ["x", "y"], rows, summary)
    if args.out:
        (Path(args.out) / "wulff.svg").write_text(shape.to_svg())


def cmd_phi(args) -> None:
    solver = SolverConfig(eps=tuple(args.eps) if args.eps else SolverConfig.eps)
    results = []
    for n in args.n:
        spec = GridSpec(n, args.p, _seed(args))
        for k in range(args.samples):
            results.append(phi(sample_configuration(spec, k), solver))
    _emit(args, "phi", lab.PHI_COLUMNS, lab.phi_rows(results), {"results": [r.to_json() for r in results]})


def cmd_tail(args) -> None:
    if not args.t:
        raise SystemExit("tail needs --t")
    est = lab.tail_experiment(_spec(args, "tail"))
    _emit(args, "tail", lab.TAIL_COLUMNS, est.rows(), est.to_json())


def cmd_plant_barrier(args) -> None:
    t = args.t[0] if args.t else 6.0
    rep = lab.plant_barrier_experiment(_spec(args, "barrier"), t)
    _emit(args, "barrier", lab.BARRIER_COLUMNS, rep.rows(), rep.to_json())


def cmd_plant_annulus(args) -> None:
    eps = args.eps[0] if args.eps else 0.3
    rep = lab.plant_annulus_experiment(_spec(args, "annulus"), eps)
    _emit(args, "annulus", lab.ANNULUS_COLUMNS, rep.rows(), rep.to_json())


def cmd_density(args) -> None:
    rep = lab.density_experiment(_spec(args, "density"))
    _emit(args, "density", lab.DENSITY_COLUMNS, rep.rows(), rep.to_json())


def cmd_report(args) -> None:
    if not args.out:
        raise SystemExit("report needs --out DIR")
    spec = _spec(args, "tail")
    if not spec.thresholds:
        spec = lab.ExperimentSpec("tail", spec.n, spec.p, (2 * math.sqrt(2), 3.5), spec.samples,
                                  None, spec.delta, spec.seed)
    est = lab.tail_experiment(spec)
    norm = NormModel.l1()
    for path in lab.report(args.out, tail=est, wulff=wulff_shape(norm)):
        print(path)


COMMANDS = {
    "sample": cmd_sample, "theta": cmd_theta, "mu": cmd_mu, "wulff": cmd_wulff, "phi": cmd_phi,
    "tail": cmd_tail, "plant-barrier": cmd_plant_barrier, "plant-annulus": cmd_plant_annulus,
    "density": cmd_density, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perciso", description="Isoperimetry of supercritical percolation clusters.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=int, nargs="+", default=[16], help="box radii (lengths for mu/wulff)")
        p.add_argument("--p", type=float, default=0.75)
        p.add_argument("--seed", type=int, default=0, help="overridden by PERCISO_SEED")
        p.add_argument("--samples", type=int, default=10)
        p.add_argument("--t", type=float, nargs="+", help="thresholds on n Phi_n")
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--eps", type=float, nargs="+")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    COMMANDS[args.command](args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
