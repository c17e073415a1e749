"""Command line interface.

Every run writes a ``manifest.json`` into the output directory before any
result file, recording the tool version, subcommand, seed, formats, and the
full configuration (input paths are embedded inline so the manifest is
self-contained). ``rerun`` replays a manifest and reproduces the delimited
outputs byte for byte.

Exit codes: 0 success, 2 configuration error (bad arguments, malformed
input), 3 splitting extinction, 4 filesystem error (missing output
directory, unreadable file).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .montecarlo import (
    EstimatorBudget,
    ExtinctionError,
    ldp_convergence_table,
    tube_probability,
    write_convergence_csv,
)
from .paths import PiecewiseLinearPath, path_from_json_dict
from .plotting import (
    plot_convergence,
    plot_path_overlay,
    plot_sup_curve,
    plot_trajectory,
)
from .process import ModelParams, derive_rng, simulate_trajectory, \
    write_trajectory_csv, write_trajectory_sidecar
from .rates import rate_poisson, rate_reset, rate_wiener
from .suprate import optimal_path, sup_rate, variational_minimize, write_sup_curve_csv

_TAG_SIM = 0
_TAG_MIN = 5

_FORMATS = ("csv", "json", "svg")


def _parse_formats(text: str) -> set[str]:
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in tokens if t not in _FORMATS]
    if bad:
        raise ValueError(f"unknown format {bad[0]!r}; choose from {', '.join(_FORMATS)}")
    return set(tokens) | {"csv"}


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValueError(f"n list must be comma-separated integers, got {text!r}")
    if not values or any(v < 1 for v in values):
        raise ValueError("n list must contain positive integers")
    return values


def _write_json(dest, obj) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _load_json(src) -> dict:
    with open(src, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _polyline(path: PiecewiseLinearPath):
    """Node sequence tracing the path, with duplicated times at jumps."""
    dt, slope, v_start, v_end = path.segment_arrays()
    bp = path.breakpoints
    ts = [bp[0]]
    vs = [float(v_start[0])]
    for i in range(dt.size):
        ts.append(bp[i + 1])
        vs.append(float(v_end[i]))
        nxt = float(v_start[i + 1]) if i + 1 < dt.size else float(path.values[-1])
        if nxt != v_end[i]:
            ts.append(bp[i + 1])
            vs.append(nxt)
    return np.asarray(ts), np.asarray(vs)


def _write_polyline_csv(dest, columns: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[name], dtype=float) for name in names]
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


# -- subcommand handlers -------------------------------------------------------

def _run_simulate(cfg, seed, formats, out):
    params = ModelParams(cfg["lam"], cfg["n"], grid_points=cfg["grid_points"], seed=seed)
    # raw emission keeps the recorded sup consistent with the written nodes,
    # so the bridge correction stays off here (estimators turn it on)
    sample = simulate_trajectory(params, derive_rng(seed, _TAG_SIM), bridge=False)
    write_trajectory_csv(sample, out / "trajectory.csv")
    write_trajectory_sidecar(sample, out / "trajectory.json")
    if "svg" in formats:
        plot_trajectory(out / "trajectory.csv", out / "trajectory.json",
                        out / "trajectory.svg")


def _run_rate(cfg, seed, formats, out):
    lam = cfg["lam"]
    path = path_from_json_dict(cfg["path"])
    chosen = cfg.get("functional", "all")
    results = {
        "reset": rate_reset(path, lam),
        "wiener": rate_wiener(path),
        "poisson": rate_poisson(path, lam),
    }
    with open(out / "rate.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("functional,finite,value,reset_term,kinetic_term,violation\n")
        for name, res in results.items():
            violation = "" if res.violation is None else res.violation.value
            fh.write(
                f"{name},{str(res.finite).lower()},{res.value:.17g},"
                f"{res.reset_term:.17g},{res.kinetic_term:.17g},{violation}\n"
            )
    ts, vs = _polyline(path)
    _write_polyline_csv(out / "path.csv", {"t": ts, "height": vs})
    if chosen == "all":
        printed = {k: v.to_json_dict() for k, v in results.items()}
    else:
        printed = results[chosen].to_json_dict()
    print(json.dumps(printed, indent=2))
    if "json" in formats:
        _write_json(out / "rate.json", {
            "lam": lam, **{k: v.to_json_dict() for k, v in results.items()},
        })
    if "svg" in formats:
        plot_path_overlay(out / "path.csv", out / "path.svg", title="input path")


def _run_sup_curve(cfg, seed, formats, out):
    lam, x_max, points = cfg["lam"], cfg["x_max"], cfg["points"]
    x_min = cfg["x_min"]
    if x_max <= x_min:
        raise ValueError("x-max must exceed x-min")
    if points < 2:
        raise ValueError("points must be at least 2")
    xs = np.linspace(x_min, x_max, points)
    write_sup_curve_csv(xs, lam, out / "sup_curve.csv")
    if "json" in formats:
        def _num(v):
            return v if math.isfinite(v) else None

        rows = []
        for x in xs:
            pt = sup_rate(float(x), lam)
            rows.append({
                "x": pt.x,
                "rate": _num(pt.rate),
                "s_star": _num(pt.s_star),
                "k_star": _num(pt.k_star),
                "regime": pt.regime.value,
            })
        _write_json(out / "sup_curve.json", {"lam": lam, "points": rows})
    if "svg" in formats:
        plot_sup_curve(out / "sup_curve.csv", out / "sup_curve.svg", lam=lam)


def _run_optimal_path(cfg, seed, formats, out):
    lam, x = cfg["lam"], cfg["x"]
    pt = sup_rate(x, lam)
    path = optimal_path(x, lam)
    ts, vs = _polyline(path)
    _write_polyline_csv(out / "optimal_path.csv", {"t": ts, "optimal_path": vs})
    _write_json(out / "optimal_path.json", {
        "lam": lam,
        "x": x,
        "rate": pt.rate,
        "s_star": pt.s_star,
        "k_star": pt.k_star,
        "regime": pt.regime.value,
        "path": path.to_json_dict(),
    })
    if "svg" in formats:
        plot_path_overlay(out / "optimal_path.csv", out / "optimal_path.svg",
                          title=f"optimal path, x = {x:g}")


def _run_minimize(cfg, seed, formats, out):
    lam, x = cfg["lam"], cfg["x"]
    segments, restarts = cfg["segments"], cfg["restarts"]
    reference = optimal_path(x, lam)
    target = sup_rate(x, lam).rate
    found, value = variational_minimize(
        x, lam, segments=segments, restarts=restarts, rng=derive_rng(seed, _TAG_MIN)
    )
    grid = np.union1d(found.breakpoints, reference.breakpoints)
    _write_polyline_csv(out / "minimize.csv", {
        "t": grid,
        "variational": found.values_at(grid),
        "closed_form": reference.values_at(grid),
    })
    found.dump_json(out / "minimizer.json")
    reference.dump_json(out / "closed_form.json")
    if "json" in formats:
        _write_json(out / "minimize.json", {
            "lam": lam,
            "x": x,
            "segments": segments,
            "restarts": restarts,
            "variational_value": value,
            "closed_form_rate": target,
            "gap": value - target,
        })
    if "svg" in formats:
        plot_path_overlay(out / "minimize.csv", out / "minimize.svg",
                          title=f"variational minimizer, x = {x:g}")


def _run_verify(cfg, seed, formats, out):
    budget = EstimatorBudget(
        crude_trials=cfg["crude_trials"],
        p_threshold=cfg["p_threshold"],
        particles=cfg["particles"],
        replicates=cfg["replicates"],
        levels=cfg["levels"],
        grid_points=cfg["grid_points"],
        seed=seed,
    )
    table = ldp_convergence_table(cfg["lam"], cfg["x"], cfg["n_list"], budget)
    write_convergence_csv(table, out / "convergence.csv")
    if "json" in formats:
        _write_json(out / "convergence.json", table.to_json_dict())
    if "svg" in formats:
        plot_convergence(out / "convergence.csv", out / "convergence.svg")


def _run_tube(cfg, seed, formats, out):
    params = ModelParams(cfg["lam"], cfg["n"], grid_points=cfg["grid_points"], seed=seed)
    path = path_from_json_dict(cfg["path"])
    est = tube_probability(params, path, cfg["eps"], cfg["trials"])
    with open(out / "tube.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("lam,n,eps,trials,hits,p_hat,ci_low,ci_high,log_rate\n")
        fh.write(
            f"{est.lam:.17g},{est.n},{est.x:.17g},{est.trials},{est.hits},"
            f"{est.p_hat:.17g},{est.ci_low:.17g},{est.ci_high:.17g},"
            f"{est.log_rate:.17g}\n"
        )
    if "json" in formats:
        _write_json(out / "tube.json", est.to_json_dict())


_HANDLERS = {
    "simulate": _run_simulate,
    "rate": _run_rate,
    "sup-curve": _run_sup_curve,
    "optimal-path": _run_optimal_path,
    "minimize": _run_minimize,
    "verify": _run_verify,
    "tube": _run_tube,
}


def _execute(sub: str, cfg: dict, seed: int, formats: set[str], out: Path) -> None:
    manifest = {
        "tool": "resetsim",
        "version": __version__,
        "subcommand": sub,
        "seed": seed,
        "format": sorted(formats),
        "config": cfg,
        "outputs": _planned_outputs(sub, formats),
    }
    _write_json(out / "manifest.json", manifest)
    _HANDLERS[sub](cfg, seed, formats, out)


def _planned_outputs(sub: str, formats: set[str]) -> list[str]:
    json_on = "json" in formats
    svg_on = "svg" in formats
    table = {
        "simulate": ["trajectory.csv", "trajectory.json"]
        + (["trajectory.svg"] if svg_on else []),
        "rate": ["rate.csv", "path.csv"]
        + (["rate.json"] if json_on else []) + (["path.svg"] if svg_on else []),
        "sup-curve": ["sup_curve.csv"]
        + (["sup_curve.json"] if json_on else [])
        + (["sup_curve.svg"] if svg_on else []),
        "optimal-path": ["optimal_path.csv", "optimal_path.json"]
        + (["optimal_path.svg"] if svg_on else []),
        "minimize": ["minimize.csv", "minimizer.json", "closed_form.json"]
        + (["minimize.json"] if json_on else []) + (["minimize.svg"] if svg_on else []),
        "verify": ["convergence.csv"]
        + (["convergence.json"] if json_on else [])
        + (["convergence.svg"] if svg_on else []),
        "tube": ["tube.csv"] + (["tube.json"] if json_on else []),
    }
    return table[sub]


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resetsim",
        description="Simulation and large-deviation analysis of Brownian "
                    "motion with Poissonian resetting.",
    )
    parser.add_argument("--version", action="version", version=f"resetsim {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", default=".",
                        help="existing output directory (default: current)")
    common.add_argument("--format", default="csv,json,svg",
                        help="comma list from csv,json,svg; csv is always written")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="sample one trajectory of the reset process")
    p.add_argument("--lam", type=float, required=True, help="reset intensity")
    p.add_argument("--n", type=int, required=True, help="scaling parameter")
    p.add_argument("--grid-points", type=int, default=2048)

    p = sub.add_parser("rate", parents=[common],
                       help="evaluate the rate functionals on a stored path")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--path", required=True, help="piecewise-linear path JSON file")
    p.add_argument("--functional", choices=["reset", "wiener", "poisson", "all"],
                   default="all", help="which result to print (all are written)")

    p = sub.add_parser("sup-curve", parents=[common],
                       help="tabulate the supremum rate over a range of levels")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--points", type=int, default=201)

    p = sub.add_parser("optimal-path", parents=[common],
                       help="closed-form optimal path for one level")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--x", type=float, required=True)

    p = sub.add_parser("minimize", parents=[common],
                       help="recover the optimal path by direct minimization")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--segments", type=int, default=64)
    p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("verify", parents=[common],
                       help="Monte Carlo convergence table for the supremum rate")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n-list", required=True, help="comma list, e.g. 1,2,4,8")
    p.add_argument("--crude-trials", type=int, default=1_000_000)
    p.add_argument("--p-threshold", type=float, default=1e-4)
    p.add_argument("--particles", type=int, default=10_000)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--grid-points", type=int, default=256)

    p = sub.add_parser("tube", parents=[common],
                       help="probability of staying in an L1 tube around a path")
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--path", required=True, help="piecewise-linear path JSON file")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--grid-points", type=int, default=2048)

    p = sub.add_parser("rerun", help="replay a manifest, reproducing its outputs")
    p.add_argument("manifest", help="manifest.json from a previous run")
    p.add_argument("--out", default=None,
                   help="existing output directory (default: the manifest's)")
    return parser


def _require_positive(name: str, value) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number")


def _config_from_args(args) -> dict:
    sub = args.subcommand
    _require_positive("lam", args.lam)
    if getattr(args, "x", None) is not None and args.x < 0:
        raise ValueError("x must be nonnegative")
    if sub == "simulate":
        return {"lam": args.lam, "n": args.n, "grid_points": args.grid_points}
    if sub == "rate":
        obj = _load_json(args.path)
        path_from_json_dict(obj)
        return {"lam": args.lam, "path": obj, "functional": args.functional}
    if sub == "sup-curve":
        return {"lam": args.lam, "x_min": args.x_min, "x_max": args.x_max,
                "points": args.points}
    if sub == "optimal-path":
        return {"lam": args.lam, "x": args.x}
    if sub == "minimize":
        return {"lam": args.lam, "x": args.x, "segments": args.segments,
                "restarts": args.restarts}
    if sub == "verify":
        return {"lam": args.lam, "x": args.x, "n_list": _parse_n_list(args.n_list),
                "crude_trials": args.crude_trials, "p_threshold": args.p_threshold,
                "particles": args.particles, "replicates": args.replicates,
                "levels": args.levels, "grid_points": args.grid_points}
    if sub == "tube":
        _require_positive("eps", args.eps)
        obj = _load_json(args.path)
        path_from_json_dict(obj)
        return {"lam": args.lam, "n": args.n, "grid_points": args.grid_points,
                "path": obj, "eps": args.eps, "trials": args.trials}
    raise ValueError(f"unknown subcommand {sub!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        if args.subcommand == "rerun":
            manifest_path = Path(args.manifest)
            manifest = _load_json(manifest_path)
            sub = manifest["subcommand"]
            if sub not in _HANDLERS:
                raise ValueError(f"manifest names unknown subcommand {sub!r}")
            out = Path(args.out) if args.out is not None else manifest_path.parent
            if not out.is_dir():
                raise FileNotFoundError(f"output directory {out} does not exist")
            # path inputs are embedded, so validate them the same way a
            # direct invocation would
            cfg = manifest["config"]
            if "path" in cfg:
                path_from_json_dict(cfg["path"])
            _execute(sub, cfg, int(manifest["seed"]), set(manifest["format"]), out)
            return 0
        formats = _parse_formats(args.format)
        out = Path(args.out)
        if not out.is_dir():
            raise FileNotFoundError(f"output directory {out} does not exist")
        cfg = _config_from_args(args)
        _execute(args.subcommand, cfg, args.seed, formats, out)
        return 0
    except ExtinctionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
