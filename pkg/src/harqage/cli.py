"""
Command-line front end: ``harqage {analyze,simulate,optimize,sweep}``.

Single results are written as JSON, tables as CSV with the header
``l,eps,n,m,q1,q2,lambda_star,region,w1,w2``.  Primary outputs depend only on
the flags (and seed), so repeated runs are byte-identical; the wall-clock
timestamp goes only into the ``<output>.manifest.json`` sidecar.

Option values may also come from a JSON file given with ``--config``;
explicit flags override it.

Exit codes: 0 ok, 2 bad parameters, 3 infeasible scheme, 4 internal
consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

from .analysis import (
    ConsistencyError,
    WaitingPolicy,
    closed_form,
    epoch_objective,
    optimal_waits,
    solve_lambda_bisection,
)
from .channel import BscParams, HarqScheme, InfeasibleScheme, bsc_mds_probs, explicit_probs
from .optimizer import DEFAULT_M_RANGE, DEFAULT_N_SPAN, GridSpec, grid_search, sweep_epsilon
from .sim import ExplicitWaits, SimConfig, Threshold, run, run_replicas

EXIT_OK = 0
EXIT_BAD_PARAMS = 2
EXIT_INFEASIBLE = 3
EXIT_INCONSISTENT = 4

CSV_HEADER = ["l", "eps", "n", "m", "q1", "q2", "lambda_star", "region", "w1", "w2"]
AGREEMENT_TOL = 1e-8

CONVENTIONS = {"zero-inclusive": True, "paper-literal": False}


class BadParameters(ValueError):
    pass


def _version() -> str:
    try:
        return metadata.version("harqage")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _finite(x):
    return x if isinstance(x, (int, str)) or (x is not None and math.isfinite(x)) else None


def _manifest(args: argparse.Namespace) -> dict:
    params = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "out", "csv", "json_out", "config")
    }
    return {
        "command": args.command,
        "params": params,
        "seed": getattr(args, "seed", None),
        "version": _version(),
        "convention": args.convention,
    }


def _write(path: str | None, text: str, args: argparse.Namespace):
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
    sidecar = dict(_manifest(args), timestamp=datetime.now(timezone.utc).isoformat())
    Path(path + ".manifest.json").write_text(json.dumps(sidecar, indent=2) + "\n")


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _resolve_design(args):
    """Build (scheme, probs) from either --eps or explicit --q1/--q2."""
    try:
        scheme = HarqScheme(args.l, args.n, args.m)
    except ValueError as exc:
        raise BadParameters(str(exc)) from exc
    explicit = args.q1 is not None or args.q2 is not None
    if explicit == (args.eps is not None):
        raise BadParameters("give either --eps or both --q1 and --q2")
    try:
        if explicit:
            if args.q1 is None or args.q2 is None:
                raise BadParameters("--q1 and --q2 must be given together")
            probs = explicit_probs(args.q1, args.q2)
        else:
            bsc = BscParams(args.eps)
            probs = bsc_mds_probs(scheme, bsc, CONVENTIONS[args.convention])
    except InfeasibleScheme:
        raise
    except ValueError as exc:
        raise BadParameters(str(exc)) from exc
    return scheme, probs


def _analysis_doc(scheme, probs) -> dict:
    sol = closed_form(scheme, probs)
    lam_bis = solve_lambda_bisection(scheme, probs, tol=1e-10)
    if abs(lam_bis - sol.lambda_star) > AGREEMENT_TOL * max(1.0, abs(sol.lambda_star)):
        raise ConsistencyError(
            f"bisection {lam_bis!r} disagrees with closed form {sol.lambda_star!r}"
        )
    mo = sol.moments
    return {
        "l": scheme.data_len,
        "n": scheme.codeword_len,
        "m": scheme.ir_len,
        "q1": probs.q1,
        "q2": probs.q2,
        "mean_x": mo.mean_x,
        "mean_x2": mo.mean_x2,
        "mean_y": mo.mean_y,
        "prob_y_n": mo.prob_y_n,
        "c_xy": sol.c_xy,
        "region": str(sol.region),
        "lambda_star": sol.lambda_star,
        "w1": sol.policy.w1,
        "w2": sol.policy.w2,
        "lambda_bisection": lam_bis,
    }


def cmd_analyze(args) -> int:
    scheme, probs = _resolve_design(args)
    doc = _analysis_doc(scheme, probs)
    doc["manifest"] = _manifest(args)
    _write(args.out, _dump_json(doc), args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scheme, probs = _resolve_design(args)
    analytic = _analysis_doc(scheme, probs)
    if args.w1 is not None or args.w2 is not None:
        policy = ExplicitWaits(args.w1 or 0.0, args.w2 or 0.0)
        predicted = epoch_objective(scheme, probs, WaitingPolicy(policy.w1, policy.w2)).ratio
        policy_doc = {"mode": "explicit", "w1": policy.w1, "w2": policy.w2}
    else:
        lam = args.threshold if args.threshold is not None else analytic["lambda_star"]
        policy = Threshold(lam)
        predicted = epoch_objective(scheme, probs, optimal_waits(lam, scheme, probs)).ratio
        policy_doc = {"mode": "threshold", "lambda": lam}
    try:
        config = SimConfig(args.epochs, args.seed, policy, args.warmup)
    except ValueError as exc:
        raise BadParameters(str(exc)) from exc
    if args.replicas > 1:
        stats = run_replicas(scheme, probs, config, args.replicas, threads=args.threads)
    else:
        stats = run(scheme, probs, config)
    se = stats.stderr_avg_aoi
    z = (stats.avg_aoi - predicted) / se if se > 0 else (0.0 if stats.avg_aoi == predicted else math.inf)
    doc = {
        "analysis": analytic,
        "policy": policy_doc,
        "predicted_avg_aoi": predicted,
        "simulation": {k: _finite(v) for k, v in stats.to_dict().items()},
        "z_score": _finite(z),
        "manifest": _manifest(args),
    }
    _write(args.out, _dump_json(doc), args)
    return EXIT_OK


def _convention_flag(args) -> bool:
    return CONVENTIONS[args.convention]


def cmd_optimize(args) -> int:
    n_lo = args.n_min if args.n_min is not None else args.l
    n_hi = args.n_max if args.n_max is not None else n_lo + DEFAULT_N_SPAN
    if args.n is not None:
        n_lo = n_hi = args.n
    try:
        spec = GridSpec(args.l, (n_lo, n_hi), (args.m_min, args.m_max), args.eps, _convention_flag(args))
    except ValueError as exc:
        raise BadParameters(str(exc)) from exc
    res = grid_search(spec)
    if args.csv is not None:
        _write(args.csv, _csv_text(res.rows), args)
    best = res.best
    doc = {
        "l": args.l,
        "eps": args.eps,
        "n": res.best_n,
        "m": res.best_m,
        "q1": best.moments.q1,
        "q2": best.moments.q2,
        "lambda_star": best.lambda_star,
        "region": str(best.region),
        "w1": best.policy.w1,
        "w2": best.policy.w2,
        "lambda_bar_star": _finite(res.lambda_bar_star),
        "lambda_underbar_star": _finite(res.lambda_underbar_star),
        "cells": len(res.rows),
        "manifest": _manifest(args),
    }
    _write(args.json_out, _dump_json(doc), args)
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def cmd_sweep(args) -> int:
    eps_grid = args.eps_grid
    if eps_grid is None:
        count = int(round((args.eps_stop - args.eps_start) / args.eps_step)) + 1
        eps_grid = [round(args.eps_start + k * args.eps_step, 12) for k in range(count)]
    try:
        rows = sweep_epsilon(
            args.l_values,
            eps_grid,
            n_span=args.n_span,
            m_range=(args.m_min, args.m_max),
            include_zero_errors=_convention_flag(args),
            threads=args.threads,
        )
    except ValueError as exc:
        raise BadParameters(str(exc)) from exc
    table = []
    for r in rows:
        if r.row is None:
            table.append([r.l, r.eps, "", "", "", "", math.nan, r.region, "", ""])
        else:
            table.append(list(r.row))
    _write(args.csv, _csv_text(table), args)
    return EXIT_OK


def _add_design_args(p):
    p.add_argument("--l", type=int, default=15, help="data length in bits")
    p.add_argument("--n", type=int, default=20, help="codeword length in bits")
    p.add_argument("--m", type=int, default=1, help="IR length in bits")
    p.add_argument("--eps", type=float, help="BSC crossover probability")
    p.add_argument("--q1", type=float, help="explicit first-attempt success probability")
    p.add_argument("--q2", type=float, help="explicit second-attempt success probability")


def _add_common(p):
    p.add_argument("--config", help="JSON file with option defaults")
    p.add_argument("--convention", choices=sorted(CONVENTIONS), default="zero-inclusive",
                   help="lower limit of the BSC/MDS error sum (default: zero-inclusive)")
    p.add_argument("--threads", type=int, default=None, help="worker thread cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harqage", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form optimum for one design")
    _add_design_args(p)
    _add_common(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo check of the analysis")
    _add_design_args(p)
    _add_common(p)
    p.add_argument("--epochs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warmup", type=int, default=None, help="warm-up epochs (default 1%%)")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--w1", type=float, help="explicit wait after a first-attempt success")
    p.add_argument("--w2", type=float, help="explicit wait after a second-attempt success")
    p.add_argument("--threshold", type=float, help="threshold lambda (default: optimal)")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="grid search over (n, m)")
    p.add_argument("--l", type=int, default=15)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--n", type=int, default=None, help="fix n to a single value")
    p.add_argument("--n-min", type=int, default=None, help="default: l")
    p.add_argument("--n-max", type=int, default=None, help=f"default: n-min + {DEFAULT_N_SPAN}")
    p.add_argument("--m-min", type=int, default=DEFAULT_M_RANGE[0])
    p.add_argument("--m-max", type=int, default=DEFAULT_M_RANGE[1])
    _add_common(p)
    p.add_argument("--csv", help="write every grid row here")
    p.add_argument("--json", dest="json_out", help="write the best design here instead of stdout")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimal age versus crossover probability")
    p.add_argument("--l-values", type=_int_list, default=[10, 15, 20])
    p.add_argument("--eps-grid", type=_float_list, default=None, help="comma-separated eps values")
    p.add_argument("--eps-start", type=float, default=0.05)
    p.add_argument("--eps-stop", type=float, default=0.45)
    p.add_argument("--eps-step", type=float, default=0.05)
    p.add_argument("--n-span", type=int, default=DEFAULT_N_SPAN)
    p.add_argument("--m-min", type=int, default=DEFAULT_M_RANGE[0])
    p.add_argument("--m-max", type=int, default=DEFAULT_M_RANGE[1])
    _add_common(p)
    p.add_argument("--csv", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_sweep)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]):
    """Load ``--config`` values as subparser defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not known.command:
        return
    try:
        values = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    if not isinstance(values, dict):
        parser.error("config file must hold a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = subparsers.choices.get(known.command)
    if sub is not None:
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in values.items()})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BadParameters as exc:
        print(f"harqage: bad parameters: {exc}", file=sys.stderr)
        return EXIT_BAD_PARAMS
    except InfeasibleScheme as exc:
        print(f"harqage: infeasible scheme: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConsistencyError as exc:
        print(f"harqage: consistency failure: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
