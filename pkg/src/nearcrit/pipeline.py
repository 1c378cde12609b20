"""End-to-end studies: ground state + Green data + continuation + checks.

This is the layer the command line and the acceptance suite share.
"""

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (blowup_law, build_rate_series, concentration_report,
                          farfield_profile_error, lemma_ratio_report,
                          pohozaev_residual, rate_fit)
from .bvp import (MODE_EXPONENT, MODE_PERTURBATION, perturbation_params,
                  rescale_solution, run_continuation)
from .errors import DataError
from .geometry import Ball
from .greens import build_bundle
from .groundstate import find_ground_state
from .hyperbola import TAIL_SUBCRITICAL, classify_regime, system_params


@dataclass
class CheckResult:
    check: str
    inputs: dict
    lhs: float
    rhs: float
    residual: float
    passed: bool
    tolerance: float

    def as_dict(self):
        return {"check": self.check, "inputs": self.inputs,
                "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "pass": bool(self.passed),
                "tolerance": self.tolerance}


@dataclass
class RateStudy:
    params_base: object
    mode: str
    R: float
    gs: object
    green: object
    run: object
    series: object
    law: object
    fit: object
    pohozaev: list
    profile_errors: list
    concentration: list
    domination: list
    mu_pow_eps: list
    checks: list = field(default_factory=list)


def ground_state_for(p, N, tol=1e-9):
    return find_ground_state(system_params(p, N), tol=tol)


def green_for_ball(p, N, R=1.0, identities=False):
    ball = Ball(R=R, center=(0.0, 0.0, 0.0),
                N=int(N) if float(N).is_integer() else 3)
    needs_pt = classify_regime(p, N) == TAIL_SUBCRITICAL
    return build_bundle(ball, np.zeros(3), p=p if needs_pt or True else None,
                        identities=identities)


def run_rate_study(p, N, eps_schedule, R=1.0, mode=MODE_EXPONENT,
                   gs=None, green=None, gs_tol=1e-9, rtol=1e-11,
                   with_profiles=True):
    """Continuation sweep plus every diagnostic the rate theorems need."""
    base = (system_params(p, N) if mode == MODE_EXPONENT
            else perturbation_params(p, N, eps_schedule[0]))
    gs = gs if gs is not None else ground_state_for(p, N, tol=gs_tol)
    green = green if green is not None else green_for_ball(p, N, R=R)
    run = run_continuation(p, N, eps_schedule, R=R, mode=mode, rtol=rtol,
                           allow_skip=(mode == MODE_PERTURBATION))
    series = build_rate_series(run, green)
    law = blowup_law(base, gs, green, mode=mode)
    try:
        fit = rate_fit(series, law)
    except DataError:
        fit = None          # schedule too short for a fit; data still usable

    poh = [pohozaev_residual(s) for s in run.solutions]
    prof = ([farfield_profile_error(s, gs, green) for s in run.solutions]
            if with_profiles and mode == MODE_EXPONENT else [])
    conc = ([concentration_report(s, gs) for s in run.solutions]
            if mode == MODE_EXPONENT else [])
    doms = [rescale_solution(s, gs) for s in run.solutions]
    mus = [lemma_ratio_report(s) for s in run.solutions]
    return RateStudy(params_base=base, mode=mode, R=R, gs=gs, green=green,
                     run=run, series=series, law=law, fit=fit,
                     pohozaev=poh, profile_errors=prof, concentration=conc,
                     domination=doms,
                     mu_pow_eps=[m["mu_pow_eps"] for m in mus])


def geometric_schedule(start, end, ratio):
    """start, start*ratio, ... down to (approximately) end, inclusive."""
    if not (0 < ratio < 1 and 0 < end < start):
        raise ValueError("schedule needs 0 < ratio < 1 and 0 < end < start")
    out = []
    e = start
    while e > end * (1.0 - 1e-12):
        out.append(e)
        e *= ratio
    return out


def study_checks(study, exponent_tol, constant_tol, pohozaev_tol=1e-6,
                 profile_tol=0.10, concentration_min=0.95,
                 domination_max=3.0, mu_eps_min=0.1):
    """Turn a RateStudy into pass/fail CheckResults at pinned tolerances."""
    checks = []
    fit, law = study.fit, study.law
    if fit is None:
        return checks
    checks.append(CheckResult(
        "rate-exponent", {"p": study.params_base.p, "N": study.params_base.N,
                          "mode": study.mode},
        fit.fitted_exponent, law.exponent,
        abs(fit.fitted_exponent - law.exponent) / abs(law.exponent),
        abs(fit.fitted_exponent - law.exponent)
        <= exponent_tol * abs(law.exponent), exponent_tol))
    checks.append(CheckResult(
        "rate-constant", {"predicted_from": law.pieces},
        fit.extrapolated_constant, law.constant,
        abs(fit.extrapolated_constant - law.constant) / abs(law.constant),
        abs(fit.extrapolated_constant - law.constant)
        <= constant_tol * abs(law.constant), constant_tol))
    if study.pohozaev:
        worst = max(r.rel_residual for r in study.pohozaev)
        checks.append(CheckResult(
            "pohozaev-branch", {"n_solutions": len(study.pohozaev)},
            worst, 0.0, worst, worst < pohozaev_tol, pohozaev_tol))
    if study.profile_errors:
        ve = [e["v_err"] for e in study.profile_errors]
        ok = all(np.diff(ve) < 0) and ve[-1] < profile_tol
        checks.append(CheckResult(
            "farfield-v-profile", {"errors": [round(v, 5) for v in ve]},
            ve[-1], 0.0, ve[-1], ok, profile_tol))
    if study.concentration:
        frac = study.concentration[-1]["fraction"]
        checks.append(CheckResult(
            "concentration", study.concentration[-1], frac,
            concentration_min, 1.0 - frac, frac >= concentration_min,
            concentration_min))
    if study.domination:
        K = max(max(d.dom_ratio_u, d.dom_ratio_v) for d in study.domination)
        checks.append(CheckResult(
            "domination", {"K_per_eps": [
                round(max(d.dom_ratio_u, d.dom_ratio_v), 4)
                for d in study.domination]},
            K, domination_max, K, K < domination_max, domination_max))
        me = min(study.mu_pow_eps)
        checks.append(CheckResult(
            "mu-pow-eps", {"values": [round(v, 4) for v in study.mu_pow_eps]},
            me, mu_eps_min, me, me > mu_eps_min, mu_eps_min))
    return checks
