"""Command-line entry point.

Exit status: 0 on success with all checks passing, 1 when a verification
fails (or a computation breaks down), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .barrier import ConjugationError, conjugate, sc_sweep
from .geometry import BodyError, ConvexBody, load_body
from .inequalities import (QUADRATURE, MonteCarlo, TiltedUniform, bl_catalog, classical_bl_check,
                           dimensional_bl_check, hormander_catalog, hormander_identity_check,
                           tensorization_check, varentropy_catalog, varentropy_check)
from .ipm import exact_lp_oracle, solve_lp
from .loglaplace import EvalConfig, EvaluationError, evaluate
from .sampler import SamplerConfig, SamplerError, sample

SCHEMA = "entropic-barrier/1"
TENSORIZATION_TOL = 1e-8
_VECTOR_FLAGS = ("--theta", "--x", "--c")


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _vector(text: str, name: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if not np.all(np.isfinite(v)):
        raise UsageError(f"{name}: entries must be finite")
    return v


def _sized(text, name, body: ConvexBody) -> np.ndarray:
    if text is None:
        raise UsageError(f"{name} is required")
    v = _vector(text, name)
    if v.size != body.dim:
        raise UsageError(f"{name} has {v.size} entries but the body has dimension {body.dim}")
    return v


def _load(path: str) -> tuple[ConvexBody, str]:
    try:
        with open(path, "rb") as fh:
            digest = "sha256:" + hashlib.sha256(fh.read()).hexdigest()
    except OSError as exc:
        raise UsageError(f"cannot read body file {path!r}: {exc.strerror}") from None
    return load_body(path), digest


def _config(args) -> EvalConfig:
    return EvalConfig(mode=args.mode, mc_samples=args.samples, seed=args.seed)


def _estimator(args):
    return MonteCarlo(args.samples, args.seed) if args.mode == "mc" else QUADRATURE


def _report_dict(r) -> dict:
    d = {k: getattr(r, k) for k in ("name", "lhs", "rhs", "slack", "std_err", "passed", "tol", "terms")
         if hasattr(r, k)}
    for k in ("residual", "boundary"):
        if hasattr(r, k):
            d[k] = getattr(r, k)
    return d


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, passed, csv_table or None)

def cmd_eval(args):
    body, digest = _load(args.body[0])
    theta = _sized(args.theta, "--theta", body)
    e = evaluate(body, theta, _config(args))
    out = {"theta": e.theta, "value": e.value, "mean": e.mean, "covariance": e.covariance,
           "method": e.method, "value_is_relative": e.value_is_relative}
    if e.std_err is not None:
        out["std_err"] = e.std_err
    return digest, out, True, None


def cmd_conjugate(args):
    body, digest = _load(args.body[0])
    x = _sized(args.x[0] if args.x else None, "--x", body)
    bp = conjugate(body, x, tol=args.tol if args.tol is not None else 1e-10)
    out = {"x": bp.x, "theta": bp.theta, "value": bp.value, "gradient": bp.gradient,
           "hessian": bp.hessian, "newton_decrement": bp.newton_decrement, "iterations": bp.iterations}
    return digest, out, True, None


def cmd_verify_sc(args):
    body, digest = _load(args.body[0])
    rep = sc_sweep(body, args.directions, args.max_norm, args.seed, _config(args) if args.mode != "auto"
                   else EvalConfig(mode="auto", mc_samples=args.samples, seed=args.seed))
    out = {"nu_max": rep.nu_max, "bound": rep.bound, "pass": rep.passed, "tol": rep.tol, "mode": rep.mode,
           "samples": len(rep.samples), "errors": len(rep.errors), "nu_max_theta": rep.nu_max_theta}
    return digest, out, rep.passed, None


def _catalog_lines(reports):
    lines = [_report_dict(r) for r in reports]
    passed = all(r.passed for r in reports)
    return lines, passed


def cmd_verify_varentropy(args):
    digest = None
    if args.body:
        body, digest = _load(args.body[0])
        theta = _sized(args.theta, "--theta", body)
        cases = [(TiltedUniform(body, theta), _estimator(args))]
    else:
        cases = varentropy_catalog()
    return digest, _catalog_lines([varentropy_check(mu, est) for mu, est in cases]), None, None


def cmd_verify_bl(args):
    est = _estimator(args)
    reps = []
    for mu, g in bl_catalog():
        reps.append(dimensional_bl_check(mu, g, est))
        reps.append(classical_bl_check(mu, g, est))
    return None, _catalog_lines(reps), None, None


def cmd_verify_hormander(args):
    reps = [hormander_identity_check(V, u) for V, u in hormander_catalog()]
    return None, _catalog_lines(reps), None, None


def cmd_verify_tensorization(args):
    if len(args.body) != 2 or not args.x or len(args.x) != 2:
        raise UsageError("verify-tensorization needs --body K --body K2 --x x --x x2")
    K, d1 = _load(args.body[0])
    K2, d2 = _load(args.body[1])
    x = _sized(args.x[0], "--x", K)
    x2 = _sized(args.x[1], "--x (second)", K2)
    res = tensorization_check(K, K2, x, x2)
    passed = res <= TENSORIZATION_TOL
    digest = "sha256:" + hashlib.sha256((d1 + d2).encode()).hexdigest()
    return digest, {"residual": res, "tol": TENSORIZATION_TOL, "pass": passed}, passed, None


def cmd_solve_lp(args):
    body, digest = _load(args.body[0])
    c = _sized(args.c, "--c", body)
    if args.eps is None or args.eps <= 0:
        raise UsageError("--eps must be positive")
    trace = solve_lp(body, c, args.eps, _config(args))
    out = {"complete": trace.complete, "message": trace.message, "final_x": trace.final_x,
           "certified_value_interval": trace.certified_value_interval,
           "final_objective": trace.records[-1].objective if trace.records else None,
           "final_gap_bound": trace.records[-1].gap_bound if trace.records else None,
           "records": len(trace.records)}
    passed = trace.complete
    if passed:
        try:
            xs, val = exact_lp_oracle(body, c)
            lo, hi = trace.certified_value_interval
            out["oracle_value"] = val
            out["oracle_x"] = xs
            out["interval_contains_oracle"] = bool(lo - 1e-8 <= val <= hi + 1e-8)
            passed = out["interval_contains_oracle"]
        except BodyError:
            pass
    return digest, out, passed, trace.to_csv_rows()


def cmd_sample(args):
    body, digest = _load(args.body[0])
    theta = _sized(args.theta, "--theta", body) if args.theta else np.zeros(body.dim)
    X = sample(body, theta, args.samples, SamplerConfig(seed=args.seed))
    header = [f"x_{i + 1}" for i in range(body.dim)]
    return digest, None, True, (header, X.tolist())


COMMANDS = {
    "eval": cmd_eval,
    "conjugate": cmd_conjugate,
    "verify-sc": cmd_verify_sc,
    "verify-varentropy": cmd_verify_varentropy,
    "verify-bl": cmd_verify_bl,
    "verify-hormander": cmd_verify_hormander,
    "verify-tensorization": cmd_verify_tensorization,
    "solve-lp": cmd_solve_lp,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entropic-barrier",
                                description="Entropic barrier evaluation and verification on polytopes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--body", action="append", default=[], help="body JSON file (repeat for tensorization)")
        sp.add_argument("--theta")
        sp.add_argument("--x", action="append", default=[])
        sp.add_argument("--c")
        sp.add_argument("--eps", type=float)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--mode", choices=["exact", "mc", "auto"], default="auto")
        sp.add_argument("--samples", type=int, default=20_000)
        sp.add_argument("--directions", type=int, default=64)
        sp.add_argument("--max-norm", type=float, default=100.0)
        sp.add_argument("--out", help="output path (default: standard output)")
        sp.add_argument("--csv", help="CSV trace path for solve-lp (default: <out>.csv when --out is given)")
    return p


def _normalize_argv(argv):
    # let vector flags take values that start with '-', e.g. --c -1,-1
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VECTOR_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _csv_text(table) -> str:
    header, rows = table
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) for v in r])
    return buf.getvalue()


def _write(path, text):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_and_run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_normalize_argv(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    if args.body and args.subcommand not in ("verify-tensorization",) and len(args.body) > 1:
        print("error: --body given more than once", file=sys.stderr)
        return 2
    if args.subcommand in ("eval", "conjugate", "verify-sc", "solve-lp", "sample") and not args.body:
        print("error: --body is required", file=sys.stderr)
        return 2

    start = time.perf_counter()
    try:
        digest, payload, passed, table = COMMANDS[args.subcommand](args)
    except (UsageError, BodyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConjugationError, EvaluationError, SamplerError, FloatingPointError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - start

    meta = {"schema": SCHEMA, "version": __version__, "subcommand": args.subcommand,
            "seed": args.seed, "body_hash": digest}

    if args.subcommand == "sample":
        _write(args.out, _csv_text(table))
        return 0

    if isinstance(payload, tuple):  # catalog: one JSON line per case plus a summary line
        lines, passed = payload
        text = "".join(json.dumps(_jsonable(dict(meta, report=line))) + "\n" for line in lines)
        summary = dict(meta, summary={"cases": len(lines), "failed": sum(not l["passed"] for l in lines),
                                      "pass": passed}, wall_time_s=wall)
        text += json.dumps(_jsonable(summary)) + "\n"
        _write(args.out, text)
        return 0 if passed else 1

    doc = dict(meta, result=payload, wall_time_s=wall)
    if args.subcommand.startswith("verify") or args.subcommand == "solve-lp":
        doc["pass"] = bool(passed)
    _write(args.out, json.dumps(_jsonable(doc), indent=2) + "\n")
    if table is not None:
        csv_path = args.csv or (args.out + ".csv" if args.out else None)
        if csv_path:
            _write(csv_path, _csv_text(table))
    return 0 if passed else 1


def main() -> None:
    sys.exit(parse_and_run())


if __name__ == "__main__":
    main()
