"""Command-line front end.

    waxman model    write a model file (random or fixture)
    waxman solve    one solve at one energy, with its trace
    waxman sweep    lam(eps) over a grid, optional smoothness check
    waxman compare  power vs 2x2 over a grid (iteration counts and traces)
    waxman invert   eps for a target lam from a sweep file

Exit codes: 0 ok, 2 usage, 3 energy not below the spectrum, 4 solver
failure, 5 target outside the swept range, 6 non-monotone sweep.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import EpsilonInSpectrum, UsageError, WaxmanError
from .green import lambda_exact, make_green
from .model import FIXTURES, ModelSpec, fixture, generate, linear_spectrum, load, save
from .solver import SolverConfig, solve
from .sweep import (
    compare_schemes,
    detect_pseudoconvergence,
    interpolate_eps_of_lambda,
    parse_grid,
    read_sweep_csv,
    run_sweep,
    write_plot_file,
    write_sweep_csv,
)

OTHER_SCHEME = {"power": "2x2", "2x2": "power"}
_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--residual-tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--branch", choices=["highest", "lowest"], default="highest")
    p.add_argument("--start", default="uniform", help="'uniform', 'basis_<k>' or comma-separated entries")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waxman", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model", help="generate a model file")
    p.add_argument("--config", help="key=value defaults file")
    p.add_argument("--fixture", choices=FIXTURES)
    p.add_argument("--dim", type=int, help="dimension (default 20; identityV default 4)")
    p.add_argument("--tmin", type=float, help="lowest level of T (default 1; identityV default 2)")
    p.add_argument("--tstep", type=float, default=1.0)
    p.add_argument("--vscale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--label", default="random")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("solve", help="solve at a single energy")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--scheme", choices=["power", "2x2"], default="2x2")
    _add_solver_flags(p)
    p.add_argument("--trace", default="trace.csv", help="trace CSV output path")
    p.add_argument("--verify-oracle", action="store_true", help="compare with the dense reference solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="lam(eps) over a grid")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, help="start:stop:count, endpoints inclusive")
    p.add_argument("--scheme", choices=["power", "2x2"], default="2x2")
    _add_solver_flags(p)
    p.add_argument("--detect", action="store_true", help="run the smoothness check")
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--rerun-flagged", action="store_true", help="re-solve flagged points with the other scheme")
    p.add_argument("--warm-start", action="store_true")
    p.add_argument("--truncate", action="append", default=[], metavar="INDEX:MAXITER",
                   help="cap the iterations at one grid index (repeatable)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--plot", help="two-column 'epsilon lambda' file (default: <out stem>.dat)")
    p.add_argument("--report", help="smoothness report path (default: <out stem>.report.txt)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="power vs 2x2 over a grid")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True)
    _add_solver_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="compare.csv")
    p.add_argument("--traces", help="per-iteration traces of both schemes (default: <out stem>.traces.csv)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("invert", help="interpolate eps for a target lambda")
    p.add_argument("--config")
    p.add_argument("--sweep", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_invert)
    return parser


# -- helpers -------------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _snapshot(args) -> dict[str, object]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def write_manifest(out_path, args) -> None:
    lines = [
        f"command={args.command}",
        f"tool_version={__version__}",
        f"timestamp={datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        f"seed={getattr(args, 'seed', '')}",
    ]
    for k, v in _snapshot(args).items():
        lines.append(f"config.{k}={v}")
    Path(str(out_path) + ".manifest").write_text("\n".join(lines) + "\n")


def _solver_config(args) -> SolverConfig:
    start = args.start
    if start != "uniform" and not start.startswith("basis_"):
        try:
            start = tuple(float(x) for x in start.split(","))
        except ValueError:
            raise UsageError(f"cannot parse --start {args.start!r}") from None
    return SolverConfig(tol=args.tol, max_iter=args.max_iter, branch=args.branch, start=start,
                        residual_tol=args.residual_tol)


def _sibling(path: str, suffix: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + suffix))


# -- commands ------------------------------------------------------------------

def cmd_model(args) -> int:
    if args.dim is not None and args.dim < 1:
        raise UsageError(f"--dim must be >= 1, got {args.dim}")
    if args.fixture == "identityV":
        problem = fixture("identityV", dim=args.dim, t_min=2.0 if args.tmin is None else args.tmin)
    elif args.fixture:
        problem = fixture(args.fixture)
    else:
        dim = 20 if args.dim is None else args.dim
        t_min = 1.0 if args.tmin is None else args.tmin
        spec = ModelSpec(dim, linear_spectrum(dim, t_min, args.tstep), args.vscale,
                         seed=args.seed, label=args.label)
        problem = generate(spec)
    save(problem, args.out)
    write_manifest(args.out, args)
    print(f"wrote {args.out} dim={problem.dim} label={problem.label}")
    return 0


def cmd_solve(args) -> int:
    problem = load(args.model)
    g = make_green(problem, args.eps)
    rep = solve(g, args.scheme, _solver_config(args))
    rep.trace.write_csv(args.trace)
    write_manifest(args.trace, args)
    print(f"lambda={rep.lambda_final!r}")
    print(f"iterations={rep.iterations}")
    print(f"op_applications={rep.op_applications}")
    print(f"status={rep.status.value}")
    if args.verify_oracle:
        exact = lambda_exact(g, args.branch)
        print(f"lambda_exact={exact!r}")
        print(f"relative_difference={abs(rep.lambda_final - exact) / abs(exact):.3e}")
    return 0


def _parse_truncations(items, cfg: SolverConfig) -> dict[int, SolverConfig]:
    out = {}
    for item in items:
        try:
            idx, n = item.split(":")
            idx, n = int(idx), int(n)
        except ValueError:
            raise UsageError(f"--truncate expects INDEX:MAXITER, got {item!r}") from None
        out[idx] = replace(cfg, max_iter=n)
    return out


def cmd_sweep(args) -> int:
    problem = load(args.model)
    grid = parse_grid(args.grid)
    cfg = _solver_config(args)
    overrides = _parse_truncations(args.truncate, cfg)
    result = run_sweep(problem, grid, args.scheme, cfg, warm_start=args.warm_start,
                       point_configs=overrides, jobs=args.jobs)
    report = None
    if args.detect:
        report = detect_pseudoconvergence(result, args.threshold)
        if args.rerun_flagged and report.flags:
            redo = run_sweep(problem, [result.points[i].epsilon for i in report.flagged_indices],
                             OTHER_SCHEME[args.scheme], cfg)
            points = list(result.points)
            for i, p in zip(report.flagged_indices, redo.points):
                points[i] = p
            result = type(result)(points, result.scheme, result.problem_label)
            report = detect_pseudoconvergence(result, args.threshold)
        report_path = args.report or _sibling(args.out, ".report.txt")
        Path(report_path).write_text(report.format())
    write_sweep_csv(result, args.out, report)
    write_plot_file(result, args.plot or _sibling(args.out, ".dat"))
    write_manifest(args.out, args)
    n_conv = sum(p.converged for p in result.points)
    print(f"points={len(result.points)} converged={n_conv}" + (f" flagged={len(report.flags)}" if report else ""))
    return 0


def cmd_compare(args) -> int:
    problem = load(args.model)
    grid = parse_grid(args.grid)
    cmp = compare_schemes(problem, grid, _solver_config(args), jobs=args.jobs)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "iter_power", "iter_2x2", "apps_power", "apps_2x2",
                    "lambda_power", "lambda_2x2", "status_power", "status_2x2", "iter_ratio", "lambda_agree"])
        for r in cmp.rows:
            ratio = r.iter_2x2 / r.iter_power if r.iter_power else float("nan")
            w.writerow([f"{r.epsilon:.17g}", r.iter_power, r.iter_2x2, r.apps_power, r.apps_2x2,
                        f"{r.lambda_power:.17g}", f"{r.lambda_2x2:.17g}", r.status_power, r.status_2x2,
                        f"{ratio:.17g}", int(r.agree)])
    traces = args.traces or _sibling(args.out, ".traces.csv")
    with open(traces, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "epsilon", "n", "lambda", "eps_n", "residual", "op_apps"])
        for name, sweep in (("power", cmp.power), ("2x2", cmp.modified)):
            for p in sweep.points:
                if p.report is None:
                    continue
                for s in p.report.trace.steps:
                    w.writerow([name, f"{p.epsilon:.17g}", s.n, f"{s.lambda_n:.17g}", f"{s.eps_n:.17g}",
                                f"{s.residual:.17g}", s.op_applications])
    write_manifest(args.out, args)
    print(f"median_iter_ratio={cmp.median_iter_ratio:.6g}")
    print(f"median_apps_ratio={cmp.median_apps_ratio:.6g}")
    print(f"lambda_agree={sum(r.agree for r in cmp.rows)}/{len(cmp.rows)}")
    return 0


def cmd_invert(args) -> int:
    sweep, flagged = read_sweep_csv(args.sweep)
    eps = interpolate_eps_of_lambda(sweep, args.lam, exclude=flagged)
    print(f"epsilon={eps!r}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            defaults = read_config(args.config)
        except (OSError, UsageError) as exc:
            parser.error(str(exc))
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(defaults) - known)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        for action in sub._actions:
            if isinstance(action, argparse._StoreTrueAction) and action.dest in defaults:
                value = defaults[action.dest].lower()
                if value not in _BOOL_WORDS:
                    parser.error(f"config key {action.dest} expects true or false, got {value!r}")
                defaults[action.dest] = _BOOL_WORDS[value]
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EpsilonInSpectrum as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except WaxmanError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
