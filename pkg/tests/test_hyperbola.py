import numpy as np
import pytest

from nearcrit.errors import DomainError, InfeasibleParameters
from nearcrit.hyperbola import (TAIL_LOGARITHMIC, TAIL_SUBCRITICAL,
                                TAIL_SUPERCRITICAL, classify_regime,
                                critical_q, eps_from_qeps,
                                hyperbola_residual, qeps_from_eps, sigma_n,
                                system_params)


@pytest.mark.parametrize("p,N,q", [
    (5.0, 3, 5.0),          # symmetric point p=q=(N+2)/(N-2)
    (1.0, 5, 9.0),          # p=1 gives q=(N+4)/(N-4)
    (2.5, 3, 20.0),         # 3/3.5 + 3/21 = 1
    (3.0, 4, 3.0),
    (1.0, 9, 13.0 / 5.0),
])
def test_critical_q_values(p, N, q):
    assert critical_q(p, N) == pytest.approx(q, abs=1e-12)
    assert hyperbola_residual(p, critical_q(p, N), N) < 1e-12


def test_critical_q_is_other_half_of_curve():
    # on the stated half of the curve the partner dominates
    for N, ps in [(3, (2.5, 3.0, 4.0, 5.0)), (4, (1.5, 2.0, 3.0)),
                  (5, (1.0, 1.5, 7.0 / 3.0))]:
        for p in ps:
            assert critical_q(p, N) >= p - 1e-12


@pytest.mark.parametrize("p,N,eps,qe", [
    (5.0, 3, 0.1, 4.0),
    (5.0, 3, 0.0, 5.0),
    (2.5, 3, 1.0 / 7.0, 9.5),
])
def test_qeps_values(p, N, eps, qe):
    assert qeps_from_eps(p, N, eps) == pytest.approx(qe, rel=1e-13)


def test_qeps_roundtrip_grid():
    for N in (3, 4, 5):
        lo = 2.0 / (N - 2.0)
        hi = (N + 2.0) / (N - 2.0)
        for p in np.linspace(lo + 0.05 * (hi - lo), hi, 7):
            assert qeps_from_eps(p, N, 0.0) == pytest.approx(
                critical_q(p, N), rel=1e-14)
            for eps in (0.01, 0.1, 0.3):
                qe = qeps_from_eps(p, N, eps)
                assert eps_from_qeps(p, N, qe) == pytest.approx(
                    eps, rel=1e-10)


def test_qeps_monotone_in_eps():
    qs = [qeps_from_eps(5.0, 3, e) for e in (0.0, 0.1, 0.2, 0.4)]
    assert all(np.diff(qs) < 0)


def test_qeps_infeasible():
    # eps so large that p*q_eps <= 1
    with pytest.raises(InfeasibleParameters):
        qeps_from_eps(5.0, 3, 2.0)


@pytest.mark.parametrize("p,N,tag", [
    (5.0, 3, TAIL_SUPERCRITICAL),
    (3.0, 3, TAIL_LOGARITHMIC),
    (2.5, 3, TAIL_SUBCRITICAL),
    (1.0, 9, TAIL_SUBCRITICAL),
    (2.0, 4, TAIL_LOGARITHMIC),
])
def test_classify_regime(p, N, tag):
    assert classify_regime(p, N) == tag


def test_classify_exact_rational_tie():
    # 5/3 is not a representable float, but the rational fast path
    # recognizes p = N/(N-2) at N = 5
    assert classify_regime(5.0 / 3.0, 5) == TAIL_LOGARITHMIC


@pytest.mark.parametrize("p,N", [(0.5, 3), (2.0 / 3.0, 5), (6.0, 3)])
def test_out_of_range_p(p, N):
    with pytest.raises(DomainError):
        critical_q(p, N)


def test_dimension_bound():
    with pytest.raises(DomainError):
        critical_q(1.0, 2)


def test_system_params_fields():
    sp = system_params(5, 3, 0.2)
    assert sp.q == pytest.approx(5.0)
    assert sp.q_eps == pytest.approx(30.0 / 7.0 - 1.0)
    assert sp.alpha + sp.beta == pytest.approx(sp.N - 2.0, abs=1e-14)
    assert sp.alpha_eps == pytest.approx(sp.alpha + sp.eps, abs=1e-14)
    assert sp.regime == classify_regime(5, 3)
    sp0 = sp.at_eps(0.0)
    assert sp0.q_eps == sp0.q


def test_sigma_n_values():
    assert sigma_n(3) == pytest.approx(4.0 * np.pi, rel=1e-15)
    assert sigma_n(4) == pytest.approx(2.0 * np.pi**2, rel=1e-15)
    assert sigma_n(2) == pytest.approx(2.0 * np.pi, rel=1e-15)
