"""Command-line front end: ``fjquant analyze|string-model|simulate|verify``.

Exit codes: 0 success, 1 bad input, 2 round cap exhausted, 3 gauge or
inconsistent constraints, 4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__, checks, dynamics
from .fjengine import DEFAULT_MAX_ROUNDS, EXHAUSTED, NONSINGULAR, analyze, format_text, report
from .model import ModelError, load_model, serialize
from .stringmodel import StringModelError, StringParams, build_endpoint_model, params_from_strings
from .symexpr import ExprError, eval_numeric, parse_expr

EXIT_OK, EXIT_INPUT, EXIT_EXHAUSTED, EXIT_GAUGE, EXIT_VERIFY = 0, 1, 2, 3, 4

log = logging.getLogger("fjquant")


class UsageError(ValueError):
    pass


def _default_rounds() -> int:
    env = os.environ.get("FJ_MAX_ROUNDS")
    if env is None:
        return DEFAULT_MAX_ROUNDS
    try:
        n = int(env)
    except ValueError:
        raise UsageError(f"FJ_MAX_ROUNDS must be an integer, got {env!r}")
    if n < 1:
        raise UsageError("FJ_MAX_ROUNDS must be >= 1")
    return n


def _read_model_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"model file not found: {path}")
    return p.read_text()


def _number(text: str, what: str) -> float:
    """A numeric CLI value; accepts plain numbers and constant expressions like 1/40."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(eval_numeric(parse_expr(text, ()), {}))
    except ExprError as exc:
        raise UsageError(f"{what} must be numeric: {exc}")


def _exit_for_status(status: str) -> int:
    if status == NONSINGULAR:
        return EXIT_OK
    if status == EXHAUSTED:
        return EXIT_EXHAUSTED
    return EXIT_GAUGE


# --- subcommands -------------------------------------------------------------------

def cmd_analyze(args, out) -> int:
    rounds = args.max_rounds if args.max_rounds is not None else _default_rounds()
    if rounds < 1:
        raise UsageError("--max-rounds must be >= 1")
    model = load_model(_read_model_text(args.model))
    result, table = analyze(model, rounds)
    rep = report(result, table)
    if args.format == "json":
        out.write(json.dumps(rep, indent=2) + "\n")
    else:
        out.write(format_text(rep) + "\n")
    return _exit_for_status(result.status)


def cmd_string_model(args, out) -> int:
    p = params_from_strings(args.bfield, args.mass, args.eps, args.alpha_prime)
    if p.expr("b").is_zero():
        raise UsageError("--bfield must be nonzero")
    out.write(serialize(build_endpoint_model(p, truncate=not args.no_truncate)))
    return EXIT_OK


def _write_convergence(res: dynamics.ConvergenceResult, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "convergence.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "omega2", "abs_error"])
        for row in zip(res.eps, res.omega2, res.errors):
            w.writerow([repr(float(v)) for v in row])
    return path


def cmd_simulate(args, out) -> int:
    b = _number(args.bfield, "--bfield")
    m = _number(args.mass, "--mass")
    k = _number(args.k, "--k")
    out_dir = Path(args.out)
    if args.eps_list:
        try:
            eps_list = [_number(e, "--eps-list") for e in args.eps_list.split(",") if e.strip()]
        except UsageError:
            raise
        res = dynamics.convergence_study(k, m, eps_list)
        path = _write_convergence(res, out_dir)
        out.write(f"dispersion convergence (k = {k:g}, m = {m:g}, target omega^2 = "
                  f"{res.expected_omega2:g})\n")
        for e, w2, err in zip(res.eps, res.omega2, res.errors):
            out.write(f"  eps = {e:.6f}  omega^2 = {w2:.8f}  error = {err:.3e}\n")
        out.write(f"observed order: {res.observed_order:.3f}\n")
        out.write(f"wrote {path}\n")
        return EXIT_OK
    if args.N < 2:
        raise UsageError("--N must be >= 2")
    eps = _number(args.eps, "--eps") if args.eps is not None else math.pi / args.N
    if not eps > 0:
        raise UsageError("--eps must be positive")
    dt = _number(args.dt, "--dt") if args.dt is not None else eps / 4
    if not 0 < dt <= eps:
        raise UsageError(f"--dt must satisfy 0 < dt <= eps ({eps:g})")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.every < 1:
        raise UsageError("--every must be >= 1")
    p = StringParams(b=b, m=m, eps=eps, N=args.N)
    state = dynamics.init_state(p, args.profile, k=k, amplitude=args.amplitude)
    traj = dynamics.simulate(state, args.steps, dt, every=args.every)
    paths = dynamics.write_csv(traj, out_dir)
    e0 = traj.energy[0]
    drift = float(abs(traj.energy - e0).max() / e0) if e0 > 0 else float(abs(traj.energy).max())
    out.write(f"simulated {args.steps} steps, N = {args.N}, eps = {eps:.6g}, dt = {dt:.6g}\n")
    out.write(f"energy drift ({'relative' if e0 > 0 else 'absolute'}): {drift:.3e}\n")
    out.write(f"max boundary residual: left {traj.left_residual.max():.3e}, "
              f"right {traj.right_residual.max():.3e}\n")
    for path in paths:
        out.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    results = checks.run_verify(points=args.points, regression=args.regression)
    failed = [c for c in results if not c.passed]
    if args.format == "json":
        doc = {"passed": not failed,
               "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail,
                           "notes": c.notes} for c in results]}
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        for c in results:
            out.write(c.line() + "\n")
            for n in c.notes:
                out.write(f"     note: {n}\n")
        if failed:
            out.write("failed: " + ", ".join(c.name for c in failed) + "\n")
        else:
            out.write(f"all {len(results)} checks passed\n")
    return EXIT_VERIFY if failed else EXIT_OK


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fjquant", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the symplectic iteration on a model file")
    a.add_argument("--model", required=True, help="model JSON file, or - for stdin")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--max-rounds", type=int, default=None,
                   help=f"round cap (default {DEFAULT_MAX_ROUNDS}, or $FJ_MAX_ROUNDS)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("string-model", help="emit the string endpoint model as JSON")
    s.add_argument("--bfield", default="b", help="B_12 as an expression (default: symbol b)")
    s.add_argument("--mass", default="m")
    s.add_argument("--eps", default="eps")
    s.add_argument("--alpha-prime", default="alpha_prime")
    s.add_argument("--no-truncate", action="store_true",
                   help="keep terms of degree >= 2 in b")
    s.set_defaults(func=cmd_string_model)

    m = sub.add_parser("simulate", help="integrate the discrete string and write CSVs")
    m.add_argument("--bfield", default="0")
    m.add_argument("--mass", default="0")
    m.add_argument("--eps", default=None, help="lattice spacing (default pi/N)")
    m.add_argument("--N", type=int, default=64)
    m.add_argument("--dt", default=None, help="time step (default eps/4)")
    m.add_argument("--steps", type=int, default=1000)
    m.add_argument("--every", type=int, default=1, help="record every n-th step")
    m.add_argument("--profile", choices=("zero", "standing", "plane"), default="standing")
    m.add_argument("--k", default="1")
    m.add_argument("--amplitude", type=float, default=1.0)
    m.add_argument("--eps-list", default=None,
                   help="comma-separated decreasing spacings; runs the dispersion study")
    m.add_argument("--out", default=".", help="output directory")
    m.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="run the built-in consistency checks")
    v.add_argument("--points", type=int, default=100, help="Jacobi sweep points")
    v.add_argument("--regression", default=None, help="alternative reference matrix JSON")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, out)
    except (UsageError, ModelError, ExprError, StringModelError,
            dynamics.DynamicsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
