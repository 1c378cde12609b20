"""Command line: experiment orchestration and persistence.

Subcommands: ground, solve, sweep, green, verify.  Every run writes a
directory runs/<timestamp>-<digest>/ with a manifest.json recording the
configuration, produced files, and pass/fail of any checks (each numeric
check carries the tolerance used to accept it).

Exit codes: 0 success, 1 check failure, 2 numerical failure, 64 usage.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance, reporting
from .asymptotics import running_extrapolation
from .bvp import (MODE_EXPONENT, MODE_PERTURBATION, perturbation_params,
                  peak_report, solve_ball_radial, solve_box_fd)
from .errors import DomainError
from .geometry import Ball, Box
from .greens import build_bundle
from .groundstate import find_ground_state
from .hyperbola import system_params
from .pipeline import CheckResult, geometric_schedule, run_rate_study, \
    study_checks


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_schedule(text):
    """'start:end:geoR' -> decreasing geometric schedule."""
    try:
        start_s, end_s, tag = text.split(":")
        if not tag.startswith("geo"):
            raise ValueError
        start, end, ratio = float(start_s), float(end_s), float(tag[3:])
    except ValueError:
        raise UsageError(f"bad schedule '{text}', expected start:end:geoR")
    if not (start > end > 0 and 0 < ratio < 1):
        raise UsageError(
            f"schedule must decrease: got start={start}, end={end}, "
            f"ratio={ratio}")
    return geometric_schedule(start, end, ratio)


def _load_config(args, keys, required=()):
    cfg = {}
    if getattr(args, "config", None):
        cfg.update(json.loads(Path(args.config).read_text()))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    missing = [k for k in required if k not in cfg]
    if missing:
        raise UsageError(f"missing required option(s): {missing}")
    return cfg


def _parse_point(text):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad point '{text}'")
    if len(vals) != 3:
        raise UsageError("points are x,y,z")
    return np.array(vals)


def _domain_from(cfg):
    kind = cfg.get("domain", "ball")
    if kind == "ball":
        return Ball(R=float(cfg.get("R", 1.0)), center=(0.0, 0.0, 0.0),
                    N=int(cfg.get("N", 3)))
    if kind == "box":
        L = float(cfg.get("L", 1.0))
        return Box(lengths=(L, L, L))
    raise UsageError(f"unknown domain '{kind}'")


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_ground(args):
    cfg = _load_config(args, ["p", "N", "eps", "tol", "rmax"], required=("p", "N"))
    t0 = time.time()
    run_dir = reporting.new_run_dir(args.out, "ground", cfg)
    params = system_params(cfg["p"], cfg["N"], cfg.get("eps", 0.0))
    gs = find_ground_state(params, tol=cfg.get("tol", 1e-8),
                           r_max=cfg.get("rmax", 1e4))
    prof = run_dir / "profile.csv"
    consts = run_dir / "constants.json"
    gs.profile.to_csv(prof)
    reporting.write_json(consts, gs.constants_dict())
    flux = gs.diagnostics["flux_rel_err"]
    checks = [CheckResult("flux-identity", {"p": params.p, "N": params.N},
                          flux, 0.0, flux, flux < 1e-6, 1e-6)]
    reporting.write_manifest(run_dir, "ground", cfg, [prof, consts], checks,
                             t0, time.time(),
                             extra={"diagnostics": gs.diagnostics})
    print(f"ground state written to {run_dir}")
    return 0 if checks[0].passed else 2


def cmd_solve(args):
    cfg = _load_config(args, ["p", "N", "eps", "mode", "domain", "R", "L",
                              "grid"], required=("p", "N", "eps"))
    t0 = time.time()
    run_dir = reporting.new_run_dir(args.out, "solve", cfg)
    mode = cfg.get("mode", MODE_EXPONENT)
    dom = _domain_from(cfg)
    if mode in (MODE_PERTURBATION, "linear-perturbation"):
        params = perturbation_params(cfg["p"], cfg["N"], cfg["eps"])
    else:
        params = system_params(cfg["p"], cfg["N"], cfg["eps"])
    if dom.kind == "ball":
        sol = solve_ball_radial(params, R=dom.R, mode=mode)
    else:
        sol = solve_box_fd(params, dom, mode=mode,
                           n=int(cfg.get("grid", 65)))
    out_csv = run_dir / "solution.csv"
    sol.to_csv(out_csv)
    from .asymptotics import pohozaev_residual
    poh = pohozaev_residual(sol)
    tol = 1e-6 if (dom.kind == "ball" and mode == MODE_EXPONENT) else 0.05
    checks = [CheckResult("pohozaev", {"eps": sol.eps, "mode": mode},
                          poh.lhs, poh.rhs, poh.rel_residual,
                          poh.rel_residual < tol, tol)]
    extra = {"u_max": sol.u_max, "mu": sol.mu,
             "x_peak": np.asarray(sol.x_peak).tolist()}
    if dom.kind == "box":
        extra["peaks"] = {k: v for k, v in peak_report(sol).items()
                          if k != "locations"}
    reporting.write_manifest(run_dir, "solve", cfg, [out_csv], checks,
                             t0, time.time(), extra=extra)
    print(f"solution written to {run_dir}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_sweep(args):
    cfg = _load_config(args, ["p", "N", "eps", "mode", "domain", "R",
                              "gs_tol"], required=("p", "N", "eps"))
    t0 = time.time()
    run_dir = reporting.new_run_dir(args.out, "sweep", cfg)
    mode = cfg.get("mode", MODE_EXPONENT)
    if mode == "perturbation":
        mode = MODE_PERTURBATION
    sched = parse_schedule(cfg["eps"]) if isinstance(cfg["eps"], str) \
        else list(cfg["eps"])
    if any(np.diff(sched) >= 0):
        raise UsageError("eps schedule must decrease")
    study = run_rate_study(cfg["p"], cfg["N"], sched,
                           R=float(cfg.get("R", 1.0)), mode=mode,
                           gs_tol=float(cfg.get("gs_tol", 1e-8)))
    branch = run_dir / "branch.csv"
    ratefit = run_dir / "ratefit.json"
    checksf = run_dir / "checks.json"
    reporting.write_branch_csv(branch, study.run)
    fit = study.fit
    reporting.write_rate_csv(run_dir / "ratetable.csv", fit,
                             running_extrapolation(fit.scaled_values))
    reporting.write_json(ratefit, {
        "fitted_exponent": fit.fitted_exponent,
        "exponent_stderr": fit.exponent_stderr,
        "predicted_exponent": fit.predicted_exponent,
        "fitted_constant": fit.fitted_constant,
        "predicted_constant": fit.predicted_constant,
        "extrapolated_constant": fit.extrapolated_constant,
        "law_branch": study.law.branch,
        "log_factor": study.law.log_factor,
        "log_base": "natural",
        "pieces": study.law.pieces,
        "entries": fit.entries,
        "scaled_values": fit.scaled_values,
    })
    checks = study_checks(study, exponent_tol=0.15, constant_tol=0.25)
    reporting.write_json(checksf, [c.as_dict() for c in checks])
    reporting.write_manifest(
        run_dir, "sweep", cfg,
        [branch, ratefit, checksf, run_dir / "ratetable.csv"],
        checks, t0, time.time(),
        extra={"last_good_eps": study.run.last_good_eps,
               "branch_note": "least-energy branch assumed: radial "
                              "first-common-zero family on the ball"})
    print(f"sweep written to {run_dir}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_green(args):
    cfg = _load_config(args, ["domain", "R", "L", "N", "p", "x0",
                              "identities", "grid"])
    t0 = time.time()
    run_dir = reporting.new_run_dir(args.out, "green", cfg)
    dom = _domain_from(cfg)
    x0 = _parse_point(cfg.get("x0", "0,0,0")) if isinstance(
        cfg.get("x0", "0,0,0"), str) else np.asarray(cfg["x0"], float)
    if not dom.contains(x0):
        raise UsageError(f"x0={x0.tolist()} is not interior to the domain")
    bundle = build_bundle(dom, x0, p=cfg.get("p"),
                          identities=bool(cfg.get("identities", False)),
                          grid_n=int(cfg.get("grid", 49)))
    bj = run_dir / "bundle.json"
    reporting.write_json(bj, bundle.as_dict())
    # evaluation set for the field export
    if dom.kind == "ball":
        rr = np.linspace(0.05 * dom.R, 0.95 * dom.R, 60)
        pts = np.column_stack([rr, np.zeros_like(rr), np.zeros_like(rr)])
        from .greens import green_ball
        G = np.array([green_ball(x0, pt, dom.R, dom.N) for pt in pts])
        Gt = None
        if bundle.eval_radial_Gt is not None:
            Gt = bundle.eval_radial_Gt(rr)
    else:
        from .greens import green_box
        bg = green_box(dom, x0, n=int(cfg.get("grid", 49)))
        xs = bg.grid.interior_axes()[0]
        pts = np.column_stack([xs, np.full_like(xs, dom.center[1]),
                               np.full_like(xs, dom.center[2])])
        G = bg.values(pts)
        Gt = None
    fcsv = run_dir / "field.csv"
    reporting.write_field_csv(fcsv, pts, G, Gt)
    checks = []
    for name, val in bundle.residuals.items():
        if name.startswith("identity"):
            tol = 1e-6 if name == "identity_i_rel" else 1e-3
            checks.append(CheckResult(name, {"x0": x0.tolist()},
                                      val, 0.0, val, val < tol, tol))
    reporting.write_manifest(run_dir, "green", cfg, [bj, fcsv], checks,
                             t0, time.time(),
                             extra={"flags": bundle.flags})
    print(f"green bundle written to {run_dir}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_verify(args):
    suite = args.suite
    if suite not in acceptance.SUITES:
        raise UsageError(
            f"unknown suite '{suite}'; choose from "
            f"{sorted(acceptance.SUITES)}")
    t0 = time.time()
    cfg = {"suite": suite}
    run_dir = reporting.new_run_dir(args.out, "verify", cfg)
    results = acceptance.run_suite(suite, verbose=True)
    rep = run_dir / "report.json"
    reporting.write_json(rep, [c.as_dict() for c in results])
    reporting.write_manifest(run_dir, "verify", cfg, [rep], results,
                             t0, time.time())
    ok = all(c.passed for c in results)
    print(f"verify {suite}: {'PASS' if ok else 'FAIL'} "
          f"({sum(c.passed for c in results)}/{len(results)}) -> {run_dir}")
    return 0 if ok else 1


# ----------------------------------------------------------------------

def build_parser():
    ap = _Parser(prog="nearcrit",
                 description="Numerical laboratory for nearly critical "
                             "Lane-Emden systems")
    ap.add_argument("--out", default="runs", help="output directory root")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker hint recorded in manifests")
    ap.add_argument("--config", help="JSON config file (flags override)")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("ground", help="radial ground state")
    g.add_argument("--p", type=float)
    g.add_argument("--N", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--rmax", type=float)
    g.set_defaults(func=cmd_ground)

    s = sub.add_parser("solve", help="single boundary-value solve")
    s.add_argument("--p", type=float)
    s.add_argument("--N", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--mode", choices=[MODE_EXPONENT, MODE_PERTURBATION,
                                      "nearly-critical-exponent",
                                      "linear-perturbation"])
    s.add_argument("--domain", choices=["ball", "box"])
    s.add_argument("--R", type=float)
    s.add_argument("--L", type=float)
    s.add_argument("--grid", type=int)
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="continuation sweep + rate fit")
    w.add_argument("--p", type=float)
    w.add_argument("--N", type=float)
    w.add_argument("--eps", help="schedule start:end:geoR")
    w.add_argument("--mode", choices=[MODE_EXPONENT, MODE_PERTURBATION,
                                      "perturbation"])
    w.add_argument("--domain", choices=["ball"])
    w.add_argument("--R", type=float)
    w.add_argument("--gs-tol", dest="gs_tol", type=float)
    w.set_defaults(func=cmd_sweep)

    gr = sub.add_parser("green", help="Green/Robin bundle")
    gr.add_argument("--domain", choices=["ball", "box"])
    gr.add_argument("--R", type=float)
    gr.add_argument("--L", type=float)
    gr.add_argument("--N", type=int)
    gr.add_argument("--p", type=float)
    gr.add_argument("--x0")
    gr.add_argument("--grid", type=int)
    gr.add_argument("--identities", action="store_true", default=None)
    gr.set_defaults(func=cmd_green)

    v = sub.add_parser("verify", help="acceptance suites")
    v.add_argument("suite", help="identities|rates|profiles|box|all")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        code = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except Exception as exc:          # numerical failures
        from . import errors
        numeric = (errors.IntegrationFailure, errors.BracketingError,
                   errors.TailExtractionError, errors.ExtractionError,
                   errors.ContinuationFailure, errors.PositivityError,
                   errors.ResolutionError, errors.AccuracyError)
        if isinstance(exc, numeric):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 2
        if isinstance(exc, ValueError):
            print(f"usage error: {exc}", file=sys.stderr)
            return 64
        raise
    return code


if __name__ == "__main__":
    sys.exit(main())
