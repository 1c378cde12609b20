"""Numerical checks of the blow-up asymptotics: Pohozaev residuals,
rate-law fits against the predicted exponents and constants, far-field
profile limits, and concentration/domination diagnostics.

Rate laws (all limits as the defect eps -> 0; U, V the critical ground
state normalized by U(0)=1, I1 = int U^q, Ip = int V^p, J = int U^{q+1},
I2 = int U^2, phi/phi_t the Robin values at the concentration point,
sigma = sigma_N, k = p(N-2)):

exponent mode
  p > N/(N-2):  eps * umax^{(N-2)/alpha}          -> (N-2) I1 Ip |phi| / J
  p = N/(N-2):  eps * umax^{(N-2)/alpha}/log umax -> (N-2) sigma a^{N/(N-2)}
                                                        I1 |phi| / (alpha J)
  p < N/(N-2):  eps * umax^{(k-2)/alpha}          -> alpha I1^{p+1} |phi_t| / J

perturbation mode (q critical, eps the linear coefficient)
  p > N/(N-2), alpha > 1, N > 4:
                eps * umax^{2-2/alpha}            -> (N-2) I1 Ip |phi|
                                                      / ((N/2-alpha) I2)
  p = N/(N-2), N > 4:
                eps * umax^{2-2/alpha}/log umax   -> (N-2) sigma a^{N/(N-2)}
                                                I1 |phi| / (alpha(N/2-alpha) I2)
  N = 4, p = q = 3:
                eps * log umax                    -> 2 I1 Ip |phi| / (sigma b^2)
  border p = (N+4)/(2(N-2)), q <= 3:
                eps * log(umax) umax^{(3-q)/2}    -> alpha^2 I1^{p+1} |phi_t|
                                                      / ((N/2-alpha) sigma b^2)
  (N+4)/(2(N-2)) < p < N/(N-2), alpha > (2+N-k)/2:
                eps * umax^{2-(2+N-k)/alpha}      -> alpha I1^{p+1} |phi_t|
                                                      / ((N/2-alpha) I2)

These constants follow from the Pohozaev identity, the far-field limits
u_max*v -> I1*G (etc.), the boundary integral identities
oint (dG/dn)^2 (n,x-x0) = (N-2)|phi| and
oint (dGt/dn)(dG/dn)(n,x-x0) = alpha |phi_t|, and int u^{q_eps+1} -> J.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bvp import MODE_EXPONENT, MODE_PERTURBATION
from .errors import CompositionError, DataError, DomainError, WindowError
from .geometry import ball_surface_integral
from .hyperbola import TAIL_LOGARITHMIC, TAIL_SUPERCRITICAL, sigma_n


# ----------------------------------------------------------------------
# Pohozaev residual
# ----------------------------------------------------------------------

@dataclass
class PohozaevReport:
    lhs: float
    rhs: float
    rel_residual: float
    base_point: tuple


def pohozaev_residual(sol, y=None, n_theta=64):
    """Both sides of the boundary-flux identity by quadrature.

    Exponent mode:      eps * int u^{q_eps+1} = oint du/dn dv/dn (n, x-y) ds
    Perturbation mode:  eps (N/2 - alpha) int u^2 = same right-hand side.

    The right-hand side is independent of the base point y (the vector
    identity oint du/dn dv/dn n ds = 0); passing a different y probes that.
    """
    if sol.du_dn is None and sol.face_traces_u is None:
        raise DomainError("solution carries no boundary traces")
    y = np.zeros(3) if y is None else np.asarray(y, float)
    N = sol.params.N
    if sol.mode == MODE_EXPONENT:
        lhs = sol.eps * sol.int_u_q1
    else:
        lhs = sol.eps * (N / 2.0 - sol.params.alpha) * sol.int_u2

    if sol.r_grid is not None:
        R = sol.domain.R
        if sol.domain.N != 3:
            # closed form: traces are constant and the y-part integrates
            # to zero against the normal
            rhs = sol.du_dn * sol.dv_dn * sigma_n(N) * R ** N
        else:
            def f(pts, nrm):
                rel = pts - y
                return sol.du_dn * sol.dv_dn \
                    * np.einsum("ij,ij->i", nrm, rel)
            rhs = ball_surface_integral(sol.domain, f, n_theta)
    else:
        rhs = 0.0
        from .geometry import box_face_grids
        faces = box_face_grids(sol.domain, sol.grid.n)
        keys = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]
        for key, (pts, nrm, w) in zip(keys, faces):
            tu = _pad_face(sol.face_traces_u[key])
            tv = _pad_face(sol.face_traces_v[key])
            rhs += np.dot(w, tu * tv * ((pts - y) @ nrm))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return PohozaevReport(float(lhs), float(rhs),
                          float(abs(lhs - rhs) / scale), tuple(y))


def _pad_face(arr):
    m = arr.shape[0]
    out = np.zeros((m + 2, m + 2))
    out[1:-1, 1:-1] = arr
    return out.ravel()


# ----------------------------------------------------------------------
# rate laws
# ----------------------------------------------------------------------

@dataclass
class RateLaw:
    """One asymptotic law eps * scale(umax) -> constant.

    In exponent mode the natural power at finite defect is written with
    alpha_eps = alpha + eps (the normalization the rescaled solutions
    actually carry), so the law also provides exponent_at(eps), which
    tends to `exponent` as eps -> 0.  Fits remove this known drift before
    estimating the limit exponent.
    """
    mode: str
    regime: str
    branch: str                 # descriptive tag of the selected case
    exponent: float
    log_factor: str             # 'none' | 'divide' | 'multiply'
    constant: float
    pieces: dict = field(default_factory=dict)
    exponent_at_fn: object = None

    def exponent_at(self, eps):
        if self.exponent_at_fn is None:
            return self.exponent
        return self.exponent_at_fn(eps)

    def scaled_value(self, eps, u_max):
        s = eps * u_max ** self.exponent_at(eps)
        if self.log_factor == "divide":
            s /= math.log(u_max)
        elif self.log_factor == "multiply":
            s *= math.log(u_max)
        return s

    def log_correction(self, u_max):
        if self.log_factor == "divide":
            return -math.log(math.log(u_max))
        if self.log_factor == "multiply":
            return math.log(math.log(u_max))
        return 0.0


def blowup_law(params, gs, green, mode=MODE_EXPONENT):
    """Assemble the regime-appropriate rate law from computed quantities.

    green must carry phi (and phi_t for tail-subcritical p) at the
    concentration point.  Natural logarithms throughout.
    """
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    regime = params.regime
    k = p * (N - 2.0)
    I1, Ip, J = gs.int_Uq, gs.int_Vp, gs.int_Uq1
    I2 = gs.int_U2
    sN = sigma_n(N)
    phi = abs(green.phi)
    phi_t = None if green.phi_t is None else abs(green.phi_t)

    if mode == MODE_EXPONENT:
        # finite-defect exponents from the Pohozaev bookkeeping with the
        # mu^{alpha_eps}, mu^{1-eps/2} normalizations
        def _shift_harmonic(e):
            return (N - 2.0 + e * (1.0 - N / 2.0)) / (alpha + e)

        def _shift_sub(e):
            return (p + 1.0) - p * N * e / (2.0 * (alpha + e))

        if regime == TAIL_SUPERCRITICAL:
            C = (N - 2.0) * I1 * Ip * phi / J
            return RateLaw(mode, regime, "supercritical",
                           (N - 2.0) / alpha, "none", C,
                           {"int_Uq": I1, "int_Vp": Ip, "int_Uq1": J,
                            "abs_phi": phi},
                           exponent_at_fn=_shift_harmonic)
        if regime == TAIL_LOGARITHMIC:
            C = (N - 2.0) * sN * gs.a ** (N / (N - 2.0)) * I1 * phi \
                / (alpha * J)
            return RateLaw(mode, regime, "logarithmic",
                           (N - 2.0) / alpha, "divide", C,
                           {"int_Uq": I1, "a": gs.a, "int_Uq1": J,
                            "abs_phi": phi},
                           exponent_at_fn=_shift_harmonic)
        if phi_t is None:
            raise CompositionError(
                "tail-subcritical law needs phi_t in the Green bundle")
        C = alpha * I1 ** (p + 1.0) * phi_t / J
        return RateLaw(mode, regime, "subcritical", (k - 2.0) / alpha,
                       "none", C,
                       {"int_Uq": I1, "int_Uq1": J, "abs_phi_t": phi_t},
                       exponent_at_fn=_shift_sub)

    return _perturbed_law(params, gs, green)


def _perturbed_law(params, gs, green):
    """Window selection for the linearly perturbed problem.

    Cases ordered from most special to generic; raises WindowError with
    the violated inequality when no case applies.
    """
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    regime = params.regime
    k = p * (N - 2.0)
    I1, Ip, J = gs.int_Uq, gs.int_Vp, gs.int_Uq1
    I2 = gs.int_U2
    sN = sigma_n(N)
    phi = abs(green.phi)
    phi_t = None if green.phi_t is None else abs(green.phi_t)
    border = (N + 4.0) / (2.0 * (N - 2.0))

    if N == 4 and p == 3.0 and q == 3.0:
        C = 2.0 * I1 * Ip * phi / (sN * gs.b ** 2)
        return RateLaw(MODE_PERTURBATION, regime, "N4-log", 0.0,
                       "multiply", C, {"int_Uq": I1, "int_Vp": Ip,
                                       "b": gs.b, "abs_phi": phi})
    if abs(p - border) < 1e-12:
        if q > 3.0 + 1e-12:
            raise WindowError(
                f"border case p=(N+4)/(2(N-2)) needs q <= 3, got q={q}")
        if phi_t is None:
            raise CompositionError("border law needs phi_t")
        C = alpha ** 2 * I1 ** (p + 1.0) * phi_t \
            / ((N / 2.0 - alpha) * sN * gs.b ** 2)
        return RateLaw(MODE_PERTURBATION, regime, "border",
                       (3.0 - q) / 2.0, "multiply", C,
                       {"int_Uq": I1, "b": gs.b, "abs_phi_t": phi_t})
    if regime == TAIL_SUPERCRITICAL:
        if not (alpha > 1.0 and N > 4):
            raise WindowError(
                f"supercritical perturbed law needs alpha > 1 and N > 4 "
                f"(alpha={alpha}, N={N}; int U^2 must be finite)")
        C = (N - 2.0) * I1 * Ip * phi / ((N / 2.0 - alpha) * I2)
        return RateLaw(MODE_PERTURBATION, regime, "supercritical",
                       2.0 - 2.0 / alpha, "none", C,
                       {"int_Uq": I1, "int_Vp": Ip, "int_U2": I2,
                        "abs_phi": phi})
    if regime == TAIL_LOGARITHMIC:
        if not N > 4:
            raise WindowError("logarithmic perturbed law needs N > 4")
        C = (N - 2.0) * sN * gs.a ** (N / (N - 2.0)) * I1 * phi \
            / (alpha * (N / 2.0 - alpha) * I2)
        return RateLaw(MODE_PERTURBATION, regime, "logarithmic",
                       2.0 - 2.0 / alpha, "divide", C,
                       {"int_Uq": I1, "a": gs.a, "int_U2": I2,
                        "abs_phi": phi})
    # generic subcritical window
    if not (p > border):
        raise WindowError(
            f"perturbed law needs p > (N+4)/(2(N-2)) = {border} "
            f"(int U^2 diverges otherwise), got p={p}")
    sig = 2.0 + N - k
    if not (alpha > sig / 2.0):
        raise WindowError(
            f"subcritical perturbed law needs alpha > (2+N-p(N-2))/2 "
            f"= {sig / 2.0}, got alpha={alpha}")
    if phi_t is None:
        raise CompositionError("subcritical perturbed law needs phi_t")
    if math.isinf(I2):
        raise WindowError("int U^2 is not finite for these parameters")
    C = alpha * I1 ** (p + 1.0) * phi_t / ((N / 2.0 - alpha) * I2)
    return RateLaw(MODE_PERTURBATION, regime, "subcritical",
                   2.0 - sig / alpha, "none", C,
                   {"int_Uq": I1, "int_U2": I2, "abs_phi_t": phi_t})


# ----------------------------------------------------------------------
# rate series and fitting
# ----------------------------------------------------------------------

@dataclass
class RatePoint:
    eps: float
    u_max: float
    mu: float
    phi_at_peak: float
    int_u_q1: float
    int_u2: float = None


@dataclass
class RateSeries:
    entries: list
    regime: str
    mode: str

    def __post_init__(self):
        es = [e.eps for e in self.entries]
        um = [e.u_max for e in self.entries]
        if any(np.diff(es) >= 0):
            raise DataError("eps entries must be strictly decreasing")
        if any(np.diff(um) <= 0):
            raise DataError("u_max entries must be strictly increasing")


@dataclass
class RateFit:
    fitted_exponent: float
    fitted_constant: float
    predicted_exponent: float
    predicted_constant: float
    extrapolated_constant: float
    exponent_stderr: float
    scaled_values: list
    residuals: list
    entries: list


def build_rate_series(run, green):
    """RateSeries from a continuation run, restricted to the asymptotic
    segment: u_max is not globally monotone along real branches (it dips
    at moderate eps before blowing up, and carries solver noise at the
    percent level in hard perturbed regimes), so the longest strictly
    increasing run of u_max anchored at the smallest eps is used."""
    sols = run.solutions
    keep = [sols[-1]]
    for s in reversed(sols[:-1]):
        if s.u_max < keep[-1].u_max:
            keep.append(s)
        else:
            break
    tail = list(reversed(keep))
    entries = [RatePoint(eps=s.eps, u_max=s.u_max, mu=s.mu,
                         phi_at_peak=green.phi, int_u_q1=s.int_u_q1,
                         int_u2=s.int_u2)
               for s in tail]
    return RateSeries(entries, tail[0].params.regime, run.mode)


def rate_fit(series, law):
    """Weighted log-log regression of the series against the law.

    The exponent comes from regressing log(eps) (with the law's log
    correction removed) on log(u_max) with weights 1/eps; the empirical
    constant sequence eps*scale(u_max) is Richardson/Aitken extrapolated
    to eps -> 0.
    """
    if len(series.entries) < 4:
        raise DataError("rate fit needs at least 4 entries")
    es = np.array([e.eps for e in series.entries])
    um = np.array([e.u_max for e in series.entries])
    lc = np.array([law.log_correction(u) for u in um])
    # remove the known finite-defect exponent drift before regressing
    drift = np.array([(law.exponent_at(e) - law.exponent) for e in es])
    x = np.log(um)
    yv = np.log(es) + lc + drift * x
    w = 1.0 / es
    A = np.column_stack([x, np.ones_like(x)])
    W = np.sqrt(w)
    coef, res_, rank_, sv_ = np.linalg.lstsq(A * W[:, None], yv * W,
                                             rcond=None)
    slope, intercept = coef
    resid = yv - A @ coef
    dof = max(len(es) - 2, 1)
    s2 = float(resid @ (w * resid)) / dof
    cov = s2 * np.linalg.inv((A * w[:, None]).T @ A)
    fitted_exponent = -slope
    fitted_constant = math.exp(intercept)

    scaled = np.array([law.scaled_value(e, u) for e, u in zip(es, um)])
    extrapolated = _extrapolate(scaled)
    return RateFit(
        fitted_exponent=float(fitted_exponent),
        fitted_constant=float(fitted_constant),
        predicted_exponent=law.exponent,
        predicted_constant=law.constant,
        extrapolated_constant=float(extrapolated),
        exponent_stderr=float(math.sqrt(abs(cov[0, 0]))),
        scaled_values=scaled.tolist(),
        residuals=resid.tolist(),
        entries=[(float(e), float(u)) for e, u in zip(es, um)])


def _extrapolate(seq):
    """Iterated Aitken delta-squared on the scaled-value sequence."""
    x = np.asarray(seq, float)
    for _ in range(2):
        if len(x) < 3:
            break
        d1 = np.diff(x)
        d2 = np.diff(x, 2)
        safe = np.abs(d2) > 1e-14 * np.maximum(np.abs(x[2:]), 1e-30)
        new = np.where(safe, x[2:] - d1[1:] ** 2 / np.where(safe, d2, 1.0),
                       x[2:])
        x = new
    return x[-1] if len(x) else seq[-1]


def running_extrapolation(seq):
    """Aitken value using entries up to k, for the rate table export."""
    out = []
    for k in range(len(seq)):
        out.append(float(_extrapolate(seq[:k + 1])))
    return out


def perturbed_rate_check(series, gs, green, params):
    """Window-checked rate fit for the linearly perturbed problem."""
    if series.mode not in (MODE_PERTURBATION, "linear-perturbation"):
        raise DataError("series was not produced in perturbation mode")
    law = blowup_law(params, gs, green, mode=MODE_PERTURBATION)
    return rate_fit(series, law)


# ----------------------------------------------------------------------
# far-field profile limits
# ----------------------------------------------------------------------

def farfield_scalings(params, gs, sol):
    """(scale_u, scale_v, tag) so that scale_v*v -> I1*G and
    scale_u*u -> (limit field) per regime.

    In exponent mode the rescaled masses carry the exactly known factors
    mu^{-N eps/2} (from the volume element of the mu^{1-eps/2} dilation),
    which are removed so that the check isolates genuine convergence.
    """
    N, p, alpha, beta = params.N, params.p, params.alpha, params.beta
    regime = params.regime
    u_max = sol.u_max
    eps = sol.eps if sol.mode == MODE_EXPONENT else 0.0
    mu = sol.mu
    sv = u_max * mu ** (N * eps / 2.0)
    if regime == TAIL_SUPERCRITICAL:
        su = u_max ** (beta / alpha) * mu ** (eps * (beta / alpha + N / 2.0))
        tag = "G"
    elif regime == TAIL_LOGARITHMIC:
        su = u_max ** (beta / alpha) / math.log(u_max) \
            * mu ** (eps * (beta / alpha + N / 2.0))
        tag = "G"
    else:
        k = p * (N - 2.0)
        su = u_max ** ((beta + k - N) / alpha) * mu ** (eps * p * N / 2.0)
        tag = "Gt"
    return su, sv, tag


def farfield_limits(params, gs, green):
    """Coefficients of the limit fields per regime."""
    N, p, alpha = params.N, params.p, params.alpha
    regime = params.regime
    cv = gs.int_Uq
    if regime == TAIL_SUPERCRITICAL:
        cu = gs.int_Vp
    elif regime == TAIL_LOGARITHMIC:
        cu = sigma_n(N) * gs.a ** (N / (N - 2.0)) / alpha
    else:
        cu = gs.int_Uq ** p
    return cu, cv


def farfield_profile_error(sol, gs, green, radii=None):
    """Sup relative error of the scaled solution against the limit field
    on an evaluation shell away from the peak.

    Returns {'v_err', 'u_err', 'radii', 'limit'}; raises if the shell
    intersects the concentration region.
    """
    if sol.r_grid is None:
        raise DomainError("profile check expects a radial ball solution")
    R = sol.domain.R
    radii = np.asarray(radii if radii is not None
                       else np.linspace(0.5 * R, 0.9 * R, 41), float)
    if radii.min() < 0.2 * (2.0 * R):       # distance >= 0.2 * diameter
        raise DomainError(
            f"evaluation shell r>={radii.min()} intersects the peak region")
    su, sv, tag = farfield_scalings(sol.params, gs, sol)
    cu, cv = farfield_limits(sol.params, gs, green)

    if green.eval_radial_G is not None:
        Gvals = green.eval_radial_G(radii)
    else:
        raise CompositionError("green bundle lacks a radial G evaluator")
    v_scaled = sv * sol.eval_v(radii)
    v_err = float(np.max(np.abs(v_scaled - cv * Gvals)
                         / np.abs(cv * Gvals)))
    if tag == "G":
        limit_u = cu * Gvals
    else:
        if green.eval_radial_Gt is None:
            raise CompositionError(
                "subcritical profile check needs the iterated Green field")
        limit_u = cu * green.eval_radial_Gt(radii)
    u_scaled = su * sol.eval_u(radii)
    u_err = float(np.max(np.abs(u_scaled - limit_u) / np.abs(limit_u)))
    return {"v_err": v_err, "u_err": u_err,
            "radii": (float(radii.min()), float(radii.max())),
            "limit_u_tag": tag}


# ----------------------------------------------------------------------
# concentration and domination
# ----------------------------------------------------------------------

def concentration_report(sol, gs, factor=5.0):
    """Mass fraction of int v^{p+1} inside |x - x_peak| <= factor * mu^{1-eps/2},
    plus the total against the ground-state limit int V^{p+1}."""
    if sol.r_grid is None:
        raise DomainError("concentration check expects a radial solution")
    scale_r = sol.mu ** (1.0 - (sol.eps / 2.0 if sol.mode == MODE_EXPONENT
                                else 0.0))
    r_core = min(factor * scale_r, sol.domain.R)
    inside = sol.cumulative("v_p1", r_core)
    total = sol.int_v_p1
    return {"radius": float(r_core), "fraction": float(inside / total),
            "total": float(total), "limit_total": gs.int_Vp1,
            "total_vs_limit": float(total / gs.int_Vp1)}


def outside_sup_report(sol, radius_fraction=0.3):
    """Sup of u and v outside a fixed neighborhood of the peak."""
    R = sol.domain.R
    rr = np.linspace(radius_fraction * R, R, 400)
    return {"sup_u_outside": float(np.max(sol.eval_u(rr))),
            "sup_v_outside": float(np.max(sol.eval_v(rr))),
            "radius_fraction": radius_fraction}


def lemma_ratio_report(sol):
    """eps / (mu^{N-2} h(mu)) with h per regime: bounded along branches."""
    N = sol.params.N
    mu = sol.mu
    regime = sol.params.regime
    if regime == TAIL_SUPERCRITICAL:
        h = 1.0
    elif regime == TAIL_LOGARITHMIC:
        h = abs(math.log(mu))
    else:
        h = mu ** (sol.params.p * (N - 2.0) - N)
    return {"ratio": float(sol.eps / (mu ** (N - 2.0) * h)),
            "mu_pow_eps": float(mu ** sol.eps)}
