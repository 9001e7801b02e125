"""``geotrack`` command line tool.

    geotrack check CONFIG      algebraic hypotheses of the configured system
    geotrack reference CONFIG  reference plan JSON and control CSV
    geotrack track CONFIG      closed-loop simulation, trace CSV and report JSON
    geotrack verify CONFIG     numerical invariant suite

Exit codes: 0 success, 1 a hypothesis or threshold failed, 2 configuration
error.  GEOTRACK_SEED overrides the seed in the configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import __version__
from .analysis import monitor_run, recover_arrays, _error_raw
from .config import ConfigError, RunConfig, load_config
from .integrate import IntegrationError, integrate
from .io import dump_json, fmt, matrix_to_json
from .liecore import LieError
from .reference import build_reference_plan, check_regular_rank, controls_csv
from .systems import system_report
from .tracking import FeedbackContext
from .verify import run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _emit(obj, path: str | None):
    if path:
        dump_json(obj, path)
    print(json.dumps(obj, indent=2, sort_keys=True))


def _hypotheses(cfg: RunConfig):
    report = system_report(cfg.sys, cfg.pivot)
    passed = report.bracket_generating and report.semisimple and report.reg_sys
    return report, passed


def cmd_check(cfg: RunConfig) -> int:
    report, passed = _hypotheses(cfg)
    out = {"group": {"family": cfg.spec.family.value, "d": cfg.spec.d}, "m": cfg.sys.m,
           "pivot": cfg.pivot, **report.as_dict(), "ok": passed}
    _emit(out, cfg.outputs.get("check_json"))
    return EXIT_OK if passed else EXIT_FAIL


def _plan(cfg: RunConfig):
    return build_reference_plan(cfg.sys, cfg.x_infty, cfg.T, cfg.boost)


def cmd_reference(cfg: RunConfig) -> int:
    plan = _plan(cfg)
    regular, rank = check_regular_rank(plan)
    doc = plan.as_dict()
    doc["regular"] = {"rank": rank, "dim": cfg.spec.dim, "ok": regular}
    path = cfg.outputs.get("plan_json")
    if path:
        dump_json(doc, path)
    controls_path = cfg.outputs.get("controls_csv")
    if controls_path:
        with open(controls_path, "w", newline="") as fh:
            fh.write(controls_csv(plan))
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK if regular else EXIT_FAIL


def write_trace_csv(path: str, t, V, err, a, u):
    m = a.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "V", "err"] + [f"a{k + 1}" for k in range(m)] + [f"u{k + 1}" for k in range(m)])
        for i in range(len(t)):
            writer.writerow([fmt(t[i]), fmt(V[i]), fmt(err[i])] + [fmt(v) for v in a[i]] + [fmt(v) for v in u[i]])


def cmd_track(cfg: RunConfig) -> int:
    _, passed = _hypotheses(cfg)
    if not passed:
        print("system fails the tracking hypotheses; run 'geotrack check' for details", file=sys.stderr)
        return EXIT_FAIL
    plan = _plan(cfg)
    ctx = FeedbackContext(cfg.sys, plan)
    report_path = cfg.outputs.get("report_json")
    base = {
        "config": {"T": cfg.T, "t0": cfg.t0, "seed": cfg.seed, "boost": cfg.boost,
                   "integrator": cfg.integrator.as_dict()},
        "w0": matrix_to_json(cfg.w0.mat),
        "x0": matrix_to_json(cfg.x0.mat),
    }
    try:
        trace = integrate(ctx, cfg.w0, cfg.t0, cfg.integrator)
    except IntegrationError as exc:
        out = {**base, "status": "diverged", "error": str(exc), "ok": False}
        _emit(out, report_path)
        return EXIT_FAIL
    report = monitor_run(trace, plan, ctx.basis, cfg.thresholds)
    t, x, u, xr = recover_arrays(plan, trace.t, trace.w, trace.a)
    if cfg.outputs.get("trace_csv"):
        write_trace_csv(cfg.outputs["trace_csv"], t, trace.V, _error_raw(x, xr), trace.a, u)
    out = {**base, "status": "completed", "samples": len(trace.t),
           "w_end": matrix_to_json(trace.w[-1]), "monitor": report.as_dict(), "ok": report.ok}
    _emit(out, report_path)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    plan = _plan(cfg)
    seed = cfg.seed if cfg.seed is not None else 0
    checks = run_suite(cfg.sys, plan, seed=seed, samples=cfg.verify_samples)
    ok = all(c.passed for c in checks)
    out = {"seed": seed, "samples": cfg.verify_samples, "checks": [c.as_dict() for c in checks], "ok": ok}
    _emit(out, cfg.outputs.get("verify_json"))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"check": cmd_check, "reference": cmd_reference, "track": cmd_track, "verify": cmd_verify}
HELP = {
    "check": "bracket-generating, semisimple and Krylov-rank verdicts",
    "reference": "emit the reference plan JSON and control CSV",
    "track": "simulate the closed loop and write trace CSV + report JSON",
    "verify": "run the numerical invariant suite",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geotrack", description="Asymptotic tracking on compact matrix Lie groups.")
    parser.add_argument("--version", action="version", version=f"geotrack {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("config", help="path to a JSON run configuration")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except (LieError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
