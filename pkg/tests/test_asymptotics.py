import math

import numpy as np
import pytest

from nearcrit.asymptotics import (RateLaw, RatePoint, RateSeries,
                                  _extrapolate, blowup_law, rate_fit,
                                  perturbed_rate_check)
from nearcrit.bvp import MODE_EXPONENT, MODE_PERTURBATION, \
    perturbation_params
from nearcrit.errors import DataError, WindowError
from nearcrit.geometry import Ball, unit_ball
from nearcrit.greens import build_bundle
from nearcrit.groundstate import find_ground_state
from nearcrit.hyperbola import system_params


def _series(eps, umax, regime="tail-supercritical", mode=MODE_EXPONENT):
    pts = [RatePoint(eps=e, u_max=u, mu=u ** -0.5, phi_at_peak=-0.08,
                     int_u_q1=1.0) for e, u in zip(eps, umax)]
    return RateSeries(pts, regime, mode)


def _plain_law(exponent, constant=1.0, log_factor="none"):
    return RateLaw(MODE_EXPONENT, "tail-supercritical", "synthetic",
                   exponent, log_factor, constant)


def test_rate_fit_exact_power_law():
    m = np.array([4.0, 6.0, 9.0, 13.5, 20.25, 30.0])
    eps = 3.0 * m ** -2.0
    fit = rate_fit(_series(eps, m), _plain_law(2.0, 3.0))
    assert fit.fitted_exponent == pytest.approx(2.0, abs=1e-12)
    assert fit.fitted_constant == pytest.approx(3.0, rel=1e-12)
    assert fit.extrapolated_constant == pytest.approx(3.0, rel=1e-12)


def test_rate_fit_log_drift_extrapolates():
    m = np.geomspace(10.0, 1e4, 9)
    eps = 3.0 * m ** -2.0 * (1.0 + 1.0 / np.log(m))
    fit = rate_fit(_series(eps, m), _plain_law(2.0, 3.0))
    raw_last = fit.scaled_values[-1]
    assert abs(fit.extrapolated_constant - 3.0) < abs(raw_last - 3.0)


def test_rate_fit_needs_entries():
    m = np.array([4.0, 6.0, 9.0])
    with pytest.raises(DataError):
        rate_fit(_series(3.0 * m**-2, m), _plain_law(2.0))


def test_series_validation():
    with pytest.raises(DataError):
        _series([0.1, 0.2], [5.0, 6.0])
    with pytest.raises(DataError):
        _series([0.2, 0.1], [6.0, 5.0])


def test_extrapolate_geometric():
    seq = 2.0 + 3.0 * 0.5 ** np.arange(8)
    assert _extrapolate(seq) == pytest.approx(2.0, abs=1e-10)


@pytest.fixture(scope="module")
def gs53():
    return find_ground_state(system_params(5, 3), tol=1e-9)


@pytest.fixture(scope="module")
def green53():
    return build_bundle(unit_ball(), np.zeros(3), p=5.0)


def test_supercritical_law_assembly(gs53, green53):
    law = blowup_law(system_params(5, 3), gs53, green53)
    assert law.exponent == pytest.approx(2.0)
    # (N-2) I1 Ip |phi| / J with the closed bubble values = 16 sqrt3/(3 pi)
    assert law.constant == pytest.approx(16.0 * math.sqrt(3.0)
                                         / (3.0 * math.pi), rel=1e-8)
    # finite-defect exponent tends to the limit from below
    assert law.exponent_at(0.0) == pytest.approx(2.0)
    assert law.exponent_at(0.1) < 2.0


def test_subcritical_law_exponent():
    gs = find_ground_state(system_params(2.5, 3), tol=1e-9)
    green = build_bundle(unit_ball(), np.zeros(3), p=2.5)
    law = blowup_law(system_params(2.5, 3), gs, green)
    # (p(N-2)-2)/alpha = 0.5/(1/7) = 3.5
    assert law.exponent == pytest.approx(3.5, rel=1e-12)
    assert law.branch == "subcritical"
    assert law.constant > 0


def test_perturbed_window_selection():
    cases = {
        (1.0, 9.0): ("subcritical", 2.0 * (9 - 8) / (9 - 4)),
        (1.0, 8.0): ("border", 0.0),
        (3.0, 4.0): ("N4-log", 0.0),
    }
    for (p, N), (branch, expo) in cases.items():
        gs = find_ground_state(system_params(p, N),
                               tol=1e-3 if N >= 8 else 1e-9)
        ball = Ball(R=1.0, center=(0.0, 0.0, 0.0), N=int(N))
        green = build_bundle(ball, np.zeros(3), p=p)
        law = blowup_law(perturbation_params(p, N, 0.1), gs, green,
                         mode=MODE_PERTURBATION)
        assert law.branch == branch
        assert law.exponent == pytest.approx(expo, abs=1e-12)


def test_perturbed_window_refusals(gs53, green53):
    # supercritical perturbed law needs N > 4 (int U^2 finite)
    with pytest.raises(WindowError):
        blowup_law(perturbation_params(5, 3, 0.1), gs53, green53,
                   mode=MODE_PERTURBATION)


def test_perturbed_rate_check_mode_guard(gs53, green53):
    m = np.array([4.0, 6.0, 9.0, 13.5])
    series = _series(3.0 * m**-2, m)      # exponent mode
    with pytest.raises(DataError):
        perturbed_rate_check(series, gs53, green53,
                             perturbation_params(5, 3, 0.1))


def test_exponent_identity_supercritical(gs53):
    # (N-2)/alpha = beta/alpha + 1, the hyperbola closure
    sp = system_params(5, 3)
    assert (sp.N - 2.0) / sp.alpha == pytest.approx(
        sp.beta / sp.alpha + 1.0, abs=1e-14)


def test_farfield_synthetic_identity(gs53, green53):
    # fabricated exact data: u_max * v == I1 * G has zero error
    from nearcrit.asymptotics import farfield_profile_error

    class FakeSol:
        params = system_params(5, 3, 1e-9)
        mode = MODE_EXPONENT
        eps = 0.0
        u_max = 50.0
        mu = 50.0 ** (-1.0 / params.alpha_eps)

        class domain:
            R = 1.0
            N = 3

        r_grid = np.linspace(0, 1, 11)

        def eval_v(self, r):
            return gs53.int_Uq * green53.eval_radial_G(r) / self.u_max

        def eval_u(self, r):
            return gs53.int_Vp * green53.eval_radial_G(r) \
                / self.u_max ** (self.params.beta / self.params.alpha)

    rep = farfield_profile_error(FakeSol(), gs53, green53)
    assert rep["v_err"] < 1e-12
    assert rep["u_err"] < 1e-12
