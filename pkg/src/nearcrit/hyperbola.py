"""Parameter algebra for the critical hyperbola of the Lane-Emden system

    -Delta u = v^p,   -Delta v = u^q   in a domain of R^N.

The critical curve is N/(p+1) + N/(q+1) = N - 2.  Pairs below it (defect
eps > 0) admit positive Dirichlet solutions on bounded domains; on or above
it they do not.  Everything downstream (tail exponents, rescalings, rate
laws) is driven by the quantities defined here.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, InfeasibleParameters

#: classification tags for the decay of U at infinity, split by p vs N/(N-2)
TAIL_SUPERCRITICAL = "tail-supercritical"
TAIL_LOGARITHMIC = "tail-logarithmic"
TAIL_SUBCRITICAL = "tail-subcritical"

_REGIME_TAGS = (TAIL_SUPERCRITICAL, TAIL_LOGARITHMIC, TAIL_SUBCRITICAL)

# Ties against N/(N-2) route to the logarithmic regime inside this band; an
# exact-rational fast path catches p entered as a ratio of small integers.
_TIE_TOL = 1e-12
_MAX_DEN = 10**6


def _check_dimension(N):
    if not N > 2:
        raise DomainError(f"dimension N must exceed 2, got N={N}")


def _check_p(p, N):
    _check_dimension(N)
    lo = 2.0 / (N - 2.0)
    hi = (N + 2.0) / (N - 2.0)
    if not (p > lo):
        raise DomainError(
            f"p={p} violates p > 2/(N-2) = {lo} at N={N}")
    if not (p <= hi * (1.0 + 1e-14)):
        raise DomainError(
            f"p={p} violates p <= (N+2)/(N-2) = {hi} at N={N}")


def _as_exact(x):
    """Return x as a Fraction when it is exactly a small-integer ratio."""
    try:
        f = Fraction(x).limit_denominator(_MAX_DEN)
    except (OverflowError, ValueError):
        return None
    return f if float(f) == float(x) else None


def critical_q(p, N):
    """Critical partner exponent: solves N/(p+1) + N/(q+1) = N - 2 for q.

    Valid for 2/(N-2) < p <= (N+2)/(N-2); on that half of the curve the
    returned q satisfies q >= p.
    """
    _check_p(p, N)
    denom = (N - 2.0) - N / (p + 1.0)   # = N/(q+1) > 0 on the admissible range
    return N / denom - 1.0


def qeps_from_eps(p, N, eps):
    """Subcritical exponent q_eps with hyperbola defect eps.

    Inverts eps = N/(p+1) + N/(q_eps+1) - (N-2).  Requires eps >= 0 and the
    existence condition p*q_eps > 1.
    """
    _check_p(p, N)
    if eps < 0:
        raise DomainError(f"defect eps must be >= 0, got {eps}")
    denom = eps + (N - 2.0) - N / (p + 1.0)
    q_eps = N / denom - 1.0
    if p * q_eps <= 1.0:
        raise InfeasibleParameters(
            f"eps={eps} gives q_eps={q_eps} with p*q_eps <= 1; "
            "no variational solution regime")
    return q_eps


def eps_from_qeps(p, N, q_eps):
    """Hyperbola defect of the pair (p, q_eps)."""
    _check_p(p, N)
    return N / (p + 1.0) + N / (q_eps + 1.0) - (N - 2.0)


def classify_regime(p, N):
    """Tail regime of U: trichotomy of p against N/(N-2).

    Comparison uses exact rational arithmetic when both p and N are exact
    small-integer ratios, otherwise a 1e-12 band that routes ties to the
    logarithmic regime.
    """
    _check_p(p, N)
    pf, nf = _as_exact(p), _as_exact(N)
    if pf is not None and nf is not None:
        crit = nf / (nf - 2)
        if pf == crit:
            return TAIL_LOGARITHMIC
        return TAIL_SUPERCRITICAL if pf > crit else TAIL_SUBCRITICAL
    crit = N / (N - 2.0)
    if abs(p - crit) <= _TIE_TOL * max(1.0, abs(crit)):
        return TAIL_LOGARITHMIC
    return TAIL_SUPERCRITICAL if p > crit else TAIL_SUBCRITICAL


@dataclass(frozen=True)
class SystemParams:
    """Exponent bookkeeping for one system instance.

    Fields
    ------
    p, N    : first exponent and dimension (N real > 2 for radial solvers)
    q       : critical partner of p
    q_eps   : subcritical exponent at defect eps (equals q when eps = 0)
    eps     : hyperbola defect >= 0
    alpha   : N/(q+1)
    beta    : N/(p+1)
    alpha_eps : N/(q_eps+1) = alpha + eps
    """

    p: float
    N: float
    q: float
    q_eps: float
    eps: float
    alpha: float
    beta: float
    alpha_eps: float

    @property
    def regime(self):
        return classify_regime(self.p, self.N)

    @property
    def critical(self):
        return self.eps == 0.0

    def at_eps(self, eps):
        """Same (p, N) at a different defect."""
        return system_params(self.p, self.N, eps)

    def as_dict(self):
        return {
            "p": self.p, "N": self.N, "q": self.q, "q_eps": self.q_eps,
            "eps": self.eps, "alpha": self.alpha, "beta": self.beta,
            "alpha_eps": self.alpha_eps, "regime": self.regime,
        }


def system_params(p, N, eps=0.0):
    """Build SystemParams for (p, N) at hyperbola defect eps."""
    p = float(p)
    N = float(N)
    eps = float(eps)
    q = critical_q(p, N)
    q_eps = q if eps == 0.0 else qeps_from_eps(p, N, eps)
    return SystemParams(
        p=p, N=N, q=q, q_eps=q_eps, eps=eps,
        alpha=N / (q + 1.0), beta=N / (p + 1.0),
        alpha_eps=N / (q_eps + 1.0),
    )


def hyperbola_residual(p, q, N):
    """|N/(p+1) + N/(q+1) - (N-2)|, the closure defect of a claimed pair."""
    return abs(N / (p + 1.0) + N / (q + 1.0) - (N - 2.0))


def tail_exponent_u(p, N):
    """Power s with U(r) ~ r^{-s} (log-corrected in the logarithmic regime)."""
    reg = classify_regime(p, N)
    if reg == TAIL_SUBCRITICAL:
        return p * (N - 2.0) - 2.0
    return N - 2.0


def sigma_n(N):
    """Surface measure of the unit sphere in R^N: 2 pi^{N/2} / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / _gamma_half(N / 2.0)


def _gamma_half(x):
    """Gamma(x), exact product form at positive integer/half-integer x."""
    n2 = round(2.0 * x)
    if n2 > 0 and abs(2.0 * x - n2) < 1e-12:
        if n2 % 2 == 0:
            return float(math.factorial(n2 // 2 - 1))
        g = math.sqrt(math.pi)
        for j in range((n2 - 1) // 2):      # Gamma(1/2 + m) upward recurrence
            g *= 0.5 + j
        return g
    return math.gamma(x)
