import math

import numpy as np
import pytest

from nearcrit.errors import DomainError
from nearcrit.groundstate import (find_ground_state, quotient_from_profile,
                                  shoot, sobolev_constant)
from nearcrit.hyperbola import system_params


@pytest.fixture(scope="module")
def bubble_gs():
    return find_ground_state(system_params(5, 3), tol=1e-9)


def _bubble(r):
    return (1.0 + r**2 / 3.0) ** -0.5


def test_bubble_solves_radial_system():
    # closed-form oracle: substitute U = V = (1+r^2/3)^{-1/2} into the
    # radial equation using analytic derivatives
    r = np.linspace(0.05, 50.0, 2000)
    U = _bubble(r)
    dU = -(r / 3.0) * (1.0 + r**2 / 3.0) ** -1.5
    ddU = (1.0 + r**2 / 3.0) ** -1.5 * (-1.0 / 3.0) \
        + (r**2 / 3.0) * (1.0 + r**2 / 3.0) ** -2.5
    resid = ddU + (2.0 / r) * dU + U**5
    assert np.max(np.abs(resid)) < 1e-10


def test_shoot_decays_at_ground_value():
    out = shoot(system_params(5, 3), v0=1.0)
    assert out.kind == "decayed"
    prof = out.profile
    r = prof.grid
    assert np.max(np.abs(prof.U_vals - _bubble(r))) < 1e-8
    assert np.max(np.abs(prof.U_vals - prof.V_vals)) < 1e-9
    assert prof.U_vals[0] == 1.0
    assert prof.U_deriv[0] == 0.0 and prof.V_deriv[0] == 0.0


@pytest.mark.parametrize("v0", [2.0, 1e-3])
def test_shoot_misses_cross_zero(v0):
    out = shoot(system_params(5, 3), v0=v0)
    assert out.kind in ("crossed_zero", "grew_beyond_bound")
    assert out.kind == "crossed_zero"
    assert out.crossed_at > 0


def test_shoot_rejects_bad_inputs():
    with pytest.raises(DomainError):
        shoot(system_params(5, 3), v0=-1.0)
    with pytest.raises(DomainError):
        shoot(system_params(5, 3), v0=1.0, r_max=0.5)


def test_ground_state_constants(bubble_gs):
    gs = bubble_gs
    assert gs.v0 == pytest.approx(1.0, abs=1e-10)
    assert gs.a == pytest.approx(math.sqrt(3.0), abs=1e-8)
    assert gs.b == pytest.approx(math.sqrt(3.0), abs=1e-8)
    assert gs.int_Uq == pytest.approx(4.0 * math.pi * math.sqrt(3.0),
                                      rel=1e-9)
    exact_uq1 = 3.0 * math.sqrt(3.0) * math.pi**2 / 4.0
    assert gs.int_Uq1 == pytest.approx(exact_uq1, rel=1e-9)
    assert gs.int_Vp1 == pytest.approx(exact_uq1, rel=1e-9)
    assert gs.S == pytest.approx(exact_uq1 ** 0.8, rel=1e-9)
    assert gs.S == pytest.approx(7.70, abs=0.01)
    assert math.isinf(gs.int_U2)          # 2(N-2) = N at N=3... diverges


def test_sup_error_against_bubble(bubble_gs):
    r = np.linspace(0, 100, 20001)
    assert np.max(np.abs(bubble_gs.eval_U(r) - _bubble(r))) < 1e-6


def test_symmetric_pair_collapses(bubble_gs):
    r = np.geomspace(1e-3, 100.0, 500)
    assert np.max(np.abs(bubble_gs.eval_U(r) - bubble_gs.eval_V(r))) < 1e-9


def test_profile_monotone(bubble_gs):
    prof = bubble_gs.profile
    assert np.all(prof.U_vals > 0)
    assert np.all(prof.V_vals > 0)
    assert np.all(np.diff(prof.U_vals) < 0)
    assert np.all(np.diff(prof.V_vals) < 0)


def test_flux_identity_plateau(bubble_gs):
    # int_{B_R} U^q = -sigma_N R^{N-1} V'(R), limit (N-2) sigma_N a
    for R in (1.0, 10.0, 100.0, 1000.0):
        lhs, rhs = bubble_gs.flux_identity(R)
        assert lhs == pytest.approx(rhs, rel=1e-8)
    assert bubble_gs.diagnostics["flux_rel_err"] < 1e-8


def test_sobolev_constant_scale_invariance(bubble_gs):
    r = np.geomspace(1e-4, 1e4, 4000)
    U, V = bubble_gs.eval_U(r), bubble_gs.eval_V(r)
    S1 = quotient_from_profile(r, U, V, 5, 5, 3)
    lam = 2.0
    # critical dilation U_lam = lam^{alpha} U(lam r) on the same grid
    S2 = quotient_from_profile(r / lam, lam**0.5 * U, lam**0.5 * V, 5, 5, 3)
    assert S1 == pytest.approx(S2, rel=1e-8)
    assert S1 == pytest.approx(sobolev_constant(bubble_gs), rel=1e-4)


def test_refinement_stability():
    a1 = find_ground_state(system_params(5, 3), tol=1e-9, rtol=1e-9).a
    a2 = find_ground_state(system_params(5, 3), tol=1e-9, rtol=1e-11).a
    assert abs(a1 - a2) < 1e-7


def test_biharmonic_pair_n5():
    # p=1, N=5: the limit system is the fourth-order problem whose
    # explicit radial solution is (1 + r^2/lam^2)^{-1/2} scaled; the
    # subcritical tail constant is slaved to a
    gs = find_ground_state(system_params(1, 5), tol=1e-8)
    lam4 = 5.0 * 1.0 * 21.0       # N(N-4)(N^2-4)
    lam2 = math.sqrt(lam4)
    r = np.linspace(0.0, 20.0, 2001)
    exact = (1.0 + r**2 / lam2) ** -0.5
    assert np.max(np.abs(gs.eval_U(r) - exact)) < 1e-7
    assert gs.v0 == pytest.approx(5.0 / lam2, rel=1e-9)
    b_pred = gs.diagnostics["b_from_a"]
    assert gs.b == pytest.approx(b_pred, rel=1e-6)
    # r^3 V plateaus (weighted tail of the second component)
    rr = np.array([30.0, 100.0, 300.0])
    w = rr ** 3 * gs.eval_V(rr)
    assert np.max(np.abs(w / gs.a - 1.0)) < 5e-4


def test_logarithmic_regime_tail():
    gs = find_ground_state(system_params(3, 3), tol=1e-9)
    assert gs.regime == "tail-logarithmic"
    # b is slaved to a: b = a^{N/(N-2)}/(N-2) = a^3 at N=3
    assert gs.b == pytest.approx(gs.a ** 3.0, rel=1e-6)
    # log-log slope of V over the last decade is -(N-2)
    r1, r2 = 500.0, 5000.0
    slope = (math.log(gs.eval_V(r2)) - math.log(gs.eval_V(r1))) \
        / (math.log(r2) - math.log(r1))
    assert slope == pytest.approx(-1.0, abs=5e-3)


def test_subcritical_tail_exponent():
    # the slope needs the last decade of a longer run: the genuine
    # next-order correction decays only like r^{-1/2}
    gs = find_ground_state(system_params(2.5, 3), tol=1e-9, r_max=1e5)
    r1, r2 = 1e4, 1e5
    slope = (math.log(gs.eval_U(r2)) - math.log(gs.eval_U(r1))) \
        / (math.log(r2) - math.log(r1))
    assert slope == pytest.approx(-0.5, abs=5e-3)      # p(N-2)-2
    assert gs.b == pytest.approx(gs.diagnostics["b_from_a"], rel=1e-6)
    assert math.isinf(gs.int_Vp)


def test_ground_state_requires_critical_pair():
    with pytest.raises(DomainError):
        find_ground_state(system_params(5, 3, 0.1))
    with pytest.raises(DomainError):
        find_ground_state(system_params(5, 3), tol=-1.0)


def test_profile_csv(tmp_path, bubble_gs):
    path = tmp_path / "profile.csv"
    bubble_gs.profile.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "r,U,V,dU,dV"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data[0, 1] == 1.0


def test_constants_dict(bubble_gs):
    d = bubble_gs.constants_dict()
    assert set(d) == {"p", "q", "N", "a", "b", "S", "int_Uq", "int_Vp",
                      "int_Uq1", "int_Vp1", "int_U2", "regime"}
    assert d["int_U2"] is None     # infinite -> null in exports
