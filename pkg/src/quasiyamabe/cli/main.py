"""Command-line entry point: ``quasiyamabe {check,fit,warp,builtin}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from .. import __version__
from ..exprjet import ExprError
from . import builtins as builtin_registry
from .checks import REGISTRY, RUNTIME_ERRORS, Context
from .scenario import PRNG, InputError, Setup, compile_scenario, load, serialize

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

WARP_CHECKS = ("block-structure", "e36", "fiber-scal", "lambda-base", "lift", "theorem3",
               "warped-scal-crosscheck")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return x


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _tolerance(entry: dict, spec, cli_tol: float | None) -> float:
    if "tol" in entry:
        return float(entry["tol"])
    return cli_tol if cli_tol is not None else spec.tol


def run_checks(setup: Setup, entries: list[dict], *, order: int = 4, tol: float | None = None,
               strict: bool = False, points: int | None = None, seed: int | None = None) -> dict:
    """Evaluate check entries and assemble the report dictionary."""
    for e in entries:
        if e["id"] not in REGISTRY:
            raise InputError(f"unknown check {e['id']!r}; known: {', '.join(sorted(REGISTRY))}")
        need = REGISTRY[e["id"]].min_order
        if order < need:
            raise InputError(f"check {e['id']!r} needs --jet-order >= {need}")
    seed = setup.seed if seed is None else seed
    pts = setup.sample(points, seed)
    ctx = Context(setup, pts, order)

    records = []
    for entry in sorted(entries, key=lambda e: e["id"]):
        spec = REGISTRY[entry["id"]]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                out = spec.fn(ctx, entry)
        except InputError:
            raise
        except (ExprError, *RUNTIME_ERRORS) as err:
            raise InputError(f"check {entry['id']!r}: {err}") from None
        values = np.atleast_1d(np.asarray(out.values, dtype=float))
        t = _tolerance(entry, spec, tol)
        counted = np.arange(len(values)) if out.gate is None else np.flatnonzero(out.gate)
        sel = values[counted]
        vmax = float(np.max(sel)) if sel.size else 0.0
        vmean = float(np.mean(sel)) if sel.size else 0.0
        report_only = spec.report_only and not strict
        if report_only:
            verdict = "report-only"
        else:
            verdict = "pass" if vmax <= t else "fail"
        rec = {
            "id": spec.id,
            "summary": spec.summary,
            "verdict": verdict,
            "tolerance": t,
            "max": vmax,
            "mean": vmean,
            "per_point": values,
            "details": out.details,
        }
        if out.gate is not None:
            # only points satisfying the premise count; the rest are shown for reference
            rec["gated_points"] = counted
            rec["ungated_max"] = float(np.max(values)) if values.size else 0.0
            if not sel.size:
                rec["note"] = "premise holds at no sample point; nothing to assert"
        records.append(rec)

    failed = [r["id"] for r in records if r["verdict"] == "fail"]
    return {
        "scenario": setup.name,
        "environment": {
            "tool": "quasiyamabe",
            "version": __version__,
            "seed": seed,
            "jet_order": order,
            "prng": PRNG,
            "points": len(pts),
            "strict": strict,
        },
        "sample_points": pts,
        "checks": records,
        "summary": {
            "passed": sum(r["verdict"] == "pass" for r in records),
            "failed": len(failed),
            "report_only": sum(r["verdict"] == "report-only" for r in records),
            "failed_checks": failed,
        },
    }


def _csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "point", "residual", "tolerance", "verdict", "counted"])
    for rec in report["checks"]:
        gated = set(np.asarray(rec.get("gated_points", range(len(rec["per_point"])))).tolist())
        for i, v in enumerate(np.asarray(rec["per_point"], dtype=float)):
            w.writerow([rec["id"], i, repr(float(v)), repr(rec["tolerance"]), rec["verdict"], int(i in gated)])
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", help="scenario JSON file or builtin name")
    p.add_argument("--tol", type=float, help="override default tolerances")
    p.add_argument("--points", type=int, help="number of sample points")
    p.add_argument("--seed", type=int, help="sampling seed (unsigned 64-bit)")
    p.add_argument("--jet-order", type=int, default=4, help="jet order, 2..6 (default 4)")
    p.add_argument("--strict", action="store_true", help="assert report-only checks too")
    p.add_argument("--report", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasiyamabe", description="Residual checks for almost quasi-Yamabe solitons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("check", help="run the scenario's checks"))
    _add_common(sub.add_parser("fit", help="fit constant (lambda, mu) to the potential"))
    _add_common(sub.add_parser("warp", help="run the warped-product checks of a scenario"))
    b = sub.add_parser("builtin", help="list or print builtin scenarios")
    b.add_argument("name", nargs="?")
    b.add_argument("--list", action="store_true")
    return parser


def _validate_flags(args) -> None:
    if not 2 <= args.jet_order <= 6:
        raise InputError("--jet-order must be between 2 and 6")
    if args.points is not None and args.points < 1:
        raise InputError("--points must be positive")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    if args.tol is not None and not args.tol > 0:
        raise InputError("--tol must be positive")


def _cmd_check(args, warp_only: bool = False) -> int:
    setup = compile_scenario(load(args.scenario))
    entries = setup.checks
    if warp_only:
        if setup.warped is None:
            raise InputError("the warp subcommand needs a warped scenario")
        entries = [e for e in entries if e["id"] in WARP_CHECKS]
        if not entries:
            entries = [{"id": c} for c in ("block-structure", "lift", "warped-scal-crosscheck")]
    report = run_checks(setup, entries, order=args.jet_order, tol=args.tol, strict=args.strict,
                        points=args.points, seed=args.seed)
    _emit(_csv(report) if args.format == "csv" else _dump(report), args.report)
    return EXIT_FAIL if report["summary"]["failed"] else EXIT_OK


def _cmd_fit(args) -> int:
    setup = compile_scenario(load(args.scenario))
    pts = setup.sample(args.points, args.seed)
    try:
        ctx = Context(setup, pts, args.jet_order)
        fit = ctx.fit
    except (ExprError, *RUNTIME_ERRORS) as err:
        raise InputError(str(err)) from None
    tol = args.tol if args.tol is not None else REGISTRY["fit"].tol
    notes = []
    if not fit.lambda_identifiable:
        notes.append("lambda not identifiable")
    if not fit.mu_identifiable:
        notes.append("mu not identifiable")
    out = {
        "scenario": setup.name,
        "lambda": fit.lam,
        "mu": fit.mu,
        "max_residual": fit.max_residual,
        "tolerance": tol,
        "identifiable": fit.identifiable,
        "lambda_identifiable": fit.lambda_identifiable,
        "mu_identifiable": fit.mu_identifiable,
        "rank": fit.rank,
        "notes": notes,
        "verdict": "pass" if fit.max_residual <= tol else "fail",
        "environment": {"seed": setup.seed if args.seed is None else args.seed, "points": len(pts),
                        "prng": PRNG, "version": __version__},
    }
    if args.format == "csv":
        text = "key,value\n" + "".join(f"{k},{_jsonable(out[k])}\n" for k in
                                          ("lambda", "mu", "max_residual", "identifiable", "verdict"))
    else:
        text = _dump(out)
    _emit(text, args.report)
    return EXIT_OK if out["verdict"] == "pass" else EXIT_FAIL


def _cmd_builtin(args) -> int:
    if args.list or not args.name:
        sys.stdout.write("\n".join(builtin_registry.names()) + "\n")
        return EXIT_OK
    try:
        sys.stdout.write(serialize(builtin_registry.builtin(args.name)))
    except KeyError as err:
        raise InputError(err.args[0]) from None
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "builtin":
            return _cmd_builtin(args)
        _validate_flags(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_check(args, warp_only=args.command == "warp")
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
