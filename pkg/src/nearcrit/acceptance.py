"""Pinned acceptance checks, shared by `nearcrit verify` and the test
suite.  Each criterion runs at fixed desk-scale settings and reports one
or more CheckResults with the tolerance that accepts it.

Heavy objects (ground states, sweeps) are cached per process so suites
can overlap without recomputation.
"""

import functools
import math

import numpy as np

from .asymptotics import blowup_law, pohozaev_residual
from .bvp import (MODE_PERTURBATION, perturbation_params, solve_box_fd,
                  peak_report)
from .geometry import Ball, unit_ball, unit_cube
from .greens import (boundary_identity_check, green_ball_regular,
                     robin_ball, tilde_robin, tilde_robin_center_ball)
from .groundstate import find_ground_state
from .hyperbola import sigma_n, system_params
from .pipeline import CheckResult, geometric_schedule, run_rate_study


@functools.lru_cache(maxsize=None)
def _gs(p, N, tol=1e-9):
    return find_ground_state(system_params(p, N), tol=tol)


@functools.lru_cache(maxsize=None)
def _study_super():
    # ball sweep p=5, N=3, eps 0.5 down to 0.02, geometric 0.8
    return run_rate_study(5.0, 3.0, geometric_schedule(0.5, 0.02, 0.8),
                          R=1.0, gs=_gs(5.0, 3.0))


@functools.lru_cache(maxsize=None)
def _study_sub():
    # subcritical pair (2.5, 3): the exponent needs a deep-eps lever
    return run_rate_study(2.5, 3.0, geometric_schedule(0.3, 3e-4, 0.65),
                          R=1.0, gs=_gs(2.5, 3.0))


@functools.lru_cache(maxsize=None)
def _study_perturbed_19():
    # (p=1, N=9): the window where the shoot stays well conditioned
    # (boundary-zero scores below the 5e-3 gate; u_max up to ~3e5)
    return run_rate_study(1.0, 9.0, geometric_schedule(600.0, 20.0, 0.82),
                          R=1.0, mode=MODE_PERTURBATION,
                          gs=_gs(1.0, 9.0, 1e-3))


# ----------------------------------------------------------------------

def check_ground_oracle():
    """1: closed-form bubble at (p,q)=(5,5), N=3."""
    gs = _gs(5.0, 3.0)
    r = np.linspace(0.0, 100.0, 40001)
    bubble = (1.0 + r**2 / 3.0) ** -0.5
    sup_err = float(np.max(np.abs(gs.eval_U(r) - bubble)))
    a_err = abs(gs.a - math.sqrt(3.0))
    i_exact = 4.0 * math.pi * math.sqrt(3.0)
    i_err = abs(gs.int_Uq - i_exact) / i_exact
    return [
        CheckResult("1.ground-profile-sup", {"p": 5, "N": 3, "range": 100},
                    sup_err, 0.0, sup_err, sup_err < 1e-6, 1e-6),
        CheckResult("1.ground-tail-a", {"exact": math.sqrt(3.0)},
                    gs.a, math.sqrt(3.0), a_err, a_err < 1e-4, 1e-4),
        CheckResult("1.ground-int-Uq", {"exact": i_exact},
                    gs.int_Uq, i_exact, i_err, i_err < 1e-3, 1e-3),
    ]


def check_flux_identity():
    """2: int_{B_R} U^q = -sigma_N R^{N-1} V'(R) across regimes."""
    out = []
    for p in (5.0, 3.0, 2.5):
        gs = _gs(p, 3.0)
        worst = 0.0
        for R in (1.0, 10.0, 100.0):
            lhs, rhs = gs.flux_identity(R)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        out.append(CheckResult(
            f"2.flux-identity-p{p:g}", {"R": [1, 10, 100]},
            worst, 0.0, worst, worst < 1e-6, 1e-6))
    return out


def check_robin_oracle():
    """3: images Robin value against the diagonal limit of g, and the
    boundary identity i at the ball center."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        N = int(rng.choice([3, 4, 5]))
        R = float(rng.uniform(0.5, 2.0))
        x = rng.uniform(-0.4, 0.4, 3) * R
        phi = robin_ball(x, R, N)
        # independent oracle: extrapolate g(x, x + delta e) to delta -> 0
        e = rng.normal(size=3)
        e /= np.linalg.norm(e)
        deltas = np.array([1e-3, 5e-4, 2.5e-4]) * R
        vals = []
        for d in deltas:
            gp = green_ball_regular(x, x + d * e, R, N)
            gm = green_ball_regular(x, x - d * e, R, N)
            vals.append(0.5 * (gp + gm))
        v0 = (4.0 * vals[1] - vals[0]) / 3.0
        v1 = (4.0 * vals[2] - vals[1]) / 3.0
        limit = (16.0 * v1 - v0) / 15.0
        worst = max(worst, abs(limit - phi))
    rep = boundary_identity_check(unit_ball(), (0, 0, 0), "i")
    id_err = abs(rep.lhs - 1.0 / (4.0 * math.pi))
    return [
        CheckResult("3.robin-images-oracle", {"samples": 20, "N": [3, 4, 5]},
                    worst, 0.0, worst, worst < 1e-10, 1e-10),
        CheckResult("3.boundary-identity-i", {"x0": [0, 0, 0]},
                    rep.lhs, 1.0 / (4.0 * math.pi), id_err,
                    id_err < 1e-6, 1e-6),
    ]


def check_iterated_green():
    """4: identity ii dual route and mesh stability of phi_t(0)."""
    ball = unit_ball()
    pt, _, diag = tilde_robin(ball, 2.5, (0.0, 0.0, 0.0))
    rep = boundary_identity_check(ball, (0, 0, 0), "ii", p=2.5, phi_t=pt)
    coarse = tilde_robin_center_ball(1.0, 2.5, 3, n_nodes=20000)
    fine = tilde_robin_center_ball(1.0, 2.5, 3, n_nodes=40000)
    d = abs(fine - coarse)
    est = d + diag["fit_rms"]
    return [
        CheckResult("4.identity-ii-dual-route",
                    {"p": 2.5, "q": 20, "phi_t": pt},
                    rep.lhs, rep.rhs, rep.rel_residual,
                    rep.rel_residual < 1e-3, 1e-3),
        CheckResult("4.phi-t-mesh-stability",
                    {"coarse": coarse, "fine": fine, "estimate": est},
                    d, 2.0 * est, d, d <= 2.0 * est and d < 1e-6, 1e-6),
    ]


def check_pohozaev_branch():
    """5: Pohozaev residual and base-point drift along the p=5 branch."""
    study = _study_super()
    worst = max(r.rel_residual for r in study.pohozaev)
    drift = 0.0
    for sol in study.run.solutions:
        r0 = pohozaev_residual(sol)
        ry = pohozaev_residual(sol, y=(0.3, 0.0, 0.0))
        drift = max(drift, abs(r0.rhs - ry.rhs) / abs(r0.rhs))
    return [
        CheckResult("5.pohozaev-branch", {"branch": "p=5,N=3"},
                    worst, 0.0, worst, worst < 1e-6, 1e-6),
        CheckResult("5.pohozaev-base-point", {"shift": [0.3, 0, 0]},
                    drift, 0.0, drift, drift < 1e-6, 1e-6),
    ]


def check_rate_supercritical():
    """6: exponent 2 +- 0.1 and constant within 15% of the assembled
    prediction on the (5,3) ball branch."""
    study = _study_super()
    fit, law = study.fit, study.law
    exp_err = abs(fit.fitted_exponent - 2.0)
    c_rel = abs(fit.extrapolated_constant - law.constant) / law.constant
    return [
        CheckResult("6.super-exponent", {"predicted": 2.0},
                    fit.fitted_exponent, 2.0, exp_err,
                    exp_err < 0.1, 0.1),
        CheckResult("6.super-constant",
                    {"assembled_from": law.pieces,
                     "note": "(N-2) int U^q int V^p |phi| / int U^{q+1}"},
                    fit.extrapolated_constant, law.constant, c_rel,
                    c_rel < 0.15, 0.15),
    ]


def check_rate_subcritical():
    """7: exponent within 5% of 3.5 and constant within 25% on (2.5,3)."""
    study = _study_sub()
    fit, law = study.fit, study.law
    exp_rel = abs(fit.fitted_exponent - 3.5) / 3.5
    c_rel = abs(fit.extrapolated_constant - law.constant) / law.constant
    return [
        CheckResult("7.sub-exponent", {"predicted": 3.5},
                    fit.fitted_exponent, 3.5, exp_rel,
                    exp_rel < 0.05, 0.05),
        CheckResult("7.sub-constant",
                    {"assembled_from": law.pieces,
                     "note": "alpha (int U^q)^{p+1} |phi_t| / int U^{q+1}"},
                    fit.extrapolated_constant, law.constant, c_rel,
                    c_rel < 0.25, 0.25),
    ]


def check_profiles():
    """8: scaled v against I1*G on 0.5<=|x|<=0.9: decreasing, <10%."""
    study = _study_super()
    ve = [e["v_err"] for e in study.profile_errors]
    mono = all(np.diff(ve) < 0)
    return [CheckResult(
        "8.farfield-v-profile",
        {"errors_first_last": [round(ve[0], 4), round(ve[-1], 4)],
         "monotone": mono},
        ve[-1], 0.0, ve[-1], mono and ve[-1] < 0.10, 0.10)]


def check_concentration():
    """9: concentration at 5 peak lengths (supercritical branch), total
    mass convergence (both), domination K < 3 and mu^eps > 0.1 (both).

    The 95% capture at radius 5 mu^{1-eps/2} holds only where V^{p+1}
    is tail-light; on the subcritical branch the limit fraction is
    int_{|y|<5} V^{p+1} / int V^{p+1} (about 0.49 at p=2.5), so there the
    total-mass convergence is asserted instead and the fraction reported.
    """
    out = []
    s_sup = _study_super()
    frac = s_sup.concentration[-1]["fraction"]
    out.append(CheckResult(
        "9.concentration-mass", {"branch": "p=5", "radius_factor": 5},
        frac, 0.95, 1.0 - frac, frac > 0.95, 0.95))
    s_sub = _study_sub()
    gs_sub = s_sub.gs
    frac_sub = s_sub.concentration[-1]["fraction"]
    # limit fraction from the ground state itself
    y = np.geomspace(1e-4, 5.0, 4000)
    w = y ** 2 * gs_sub.eval_V(y) ** 3.5
    inner = np.trapezoid(w * y, np.log(y)) * sigma_n(3)
    limit_frac = inner / gs_sub.int_Vp1
    tot = [c["total_vs_limit"] for c in s_sub.concentration]
    out.append(CheckResult(
        "9.concentration-total-sub",
        {"branch": "p=2.5", "fraction_at_5mu": round(frac_sub, 4),
         "limit_fraction_at_5": round(float(limit_frac), 4)},
        tot[-1], 1.0, abs(tot[-1] - 1.0), abs(tot[-1] - 1.0) < 0.25, 0.25))
    for name, st in (("p5", s_sup), ("p2.5", s_sub)):
        K = max(max(d.dom_ratio_u, d.dom_ratio_v) for d in st.domination)
        me = min(st.mu_pow_eps)
        out.append(CheckResult(
            f"9.domination-{name}", {}, K, 3.0, K, K < 3.0, 3.0))
        out.append(CheckResult(
            f"9.mu-pow-eps-{name}", {}, me, 0.1, me, me > 0.1, 0.1))
    return out


def check_perturbed():
    """10: window selection for three parameter sets; fitted exponent
    within 15% of 2/5 for (p=1, N=9)."""
    out = []
    expected = {(1.0, 9.0): ("subcritical", 0.4),
                (1.0, 8.0): ("border", 0.0),
                (3.0, 4.0): ("N4-log", 0.0)}
    for (p, N), (branch, expo) in expected.items():
        gs = _gs(p, N, 1e-3 if N >= 8 else 1e-9)
        ball = Ball(R=1.0, center=(0.0, 0.0, 0.0), N=int(N))
        from .greens import build_bundle
        green = build_bundle(ball, np.zeros(3), p=p)
        law = blowup_law(perturbation_params(p, N, 0.5), gs, green,
                         mode=MODE_PERTURBATION)
        ok = law.branch == branch and abs(law.exponent - expo) < 1e-9
        out.append(CheckResult(
            f"10.window-p{p:g}-N{N:g}",
            {"selected": law.branch, "expected": branch,
             "exponent": law.exponent},
            law.exponent, expo, abs(law.exponent - expo), ok, 1e-9))
    study = _study_perturbed_19()
    fit = study.fit
    rel = abs(fit.fitted_exponent - 0.4) / 0.4
    out.append(CheckResult(
        "10.perturbed-exponent-p1N9",
        {"schedule": "600..20 geo 0.82",
         "predicted_constant": study.law.constant,
         "extrapolated_constant": fit.extrapolated_constant,
         "known_blocker":
             "the asymptotic window of this branch (u_max >~ 1e6) lies "
             "beyond double-precision shooting conditioning; in the "
             "accessible window the exponent is inflated by slowly "
             "decaying eps-linear mass corrections (see notes ledger)"},
        fit.fitted_exponent, 0.4, rel, rel < 0.15, 0.15))
    return out


def check_box():
    """11: unit-cube solves at eps=0.3, 65^3: single centered peak."""
    out = []
    for p in (2.5, 5.0):
        sol = solve_box_fd(system_params(p, 3.0, 0.3), unit_cube(), n=65)
        rep = peak_report(sol)
        ok = rep["n_peaks"] == 1 and rep["peak_to_center_cells"] <= 1.0
        out.append(CheckResult(
            f"11.box-peak-p{p:g}",
            {"n_peaks": rep["n_peaks"],
             "center_dist_cells": rep["peak_to_center_cells"],
             "u_max": sol.u_max},
            rep["peak_to_center_cells"], 1.0,
            rep["peak_to_center_cells"], ok, 1.0))
    return out


CRITERIA = {
    1: check_ground_oracle,
    2: check_flux_identity,
    3: check_robin_oracle,
    4: check_iterated_green,
    5: check_pohozaev_branch,
    6: check_rate_supercritical,
    7: check_rate_subcritical,
    8: check_profiles,
    9: check_concentration,
    10: check_perturbed,
    11: check_box,
}

SUITES = {
    "identities": (1, 2, 3, 4),
    "rates": (5, 6, 7, 10),
    "profiles": (8, 9),
    "box": (11,),
    "all": tuple(range(1, 12)),
}


def run_criterion(k):
    return CRITERIA[k]()


def run_suite(name, verbose=False):
    results = []
    for k in SUITES[name]:
        for res in run_criterion(k):
            results.append(res)
            if verbose:
                status = "PASS" if res.passed else "FAIL"
                print(f"[{status}] {res.check}: value={res.lhs:.6g} "
                      f"(tol {res.tolerance:g}, residual {res.residual:.3g})")
    return results
