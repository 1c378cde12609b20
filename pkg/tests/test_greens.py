import math

import numpy as np
import pytest

from nearcrit.errors import DomainError, RegimeError, SingularityError
from nearcrit.geometry import unit_ball, unit_cube
from nearcrit.greens import (RadialIteratedGreen, boundary_identity_check,
                             box_robin_two_routes, build_bundle,
                             grad_robin_ball, green_ball,
                             green_box,
                             iterated_green_box, iterated_green_quadrature,
                             iterated_singular_coefficient, newton_constant,
                             poisson_kernel_ball, robin_ball, tilde_robin,
                             tilde_robin_center_ball)
from nearcrit import poisson


def test_green_ball_center_value():
    # source at the center: G = (1/4pi)(1/r - 1/R)
    val = green_ball((0, 0, 0), (0.5, 0, 0), 1.0, 3)
    assert val == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)


def test_green_ball_symmetry_and_boundary():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = rng.uniform(-0.5, 0.5, 3)
        y = rng.uniform(-0.5, 0.5, 3)
        assert green_ball(x, y, 1.0, 3) == pytest.approx(
            green_ball(y, x, 1.0, 3), abs=1e-14)
    yb = np.array([0.6, 0.8, 0.0])        # |y| = 1
    assert abs(green_ball((0.2, 0.1, 0.0), yb, 1.0, 3)) < 1e-12


def test_green_ball_positive_inside():
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = rng.uniform(-0.4, 0.4, 3)
        y = rng.uniform(-0.4, 0.4, 3)
        if np.allclose(x, y):
            continue
        assert green_ball(x, y, 1.0, 3) > 0


def test_green_ball_singularity():
    with pytest.raises(SingularityError):
        green_ball((0.1, 0, 0), (0.1, 0, 0), 1.0, 3)


@pytest.mark.parametrize("x,R,expected", [
    ((0.0, 0.0, 0.0), 1.0, -1.0 / (4 * math.pi)),
    ((0.5, 0.0, 0.0), 1.0, -1.0 / (3 * math.pi)),
    ((0.0, 0.0, 0.0), 2.0, -1.0 / (8 * math.pi)),
])
def test_robin_ball_values(x, R, expected):
    assert robin_ball(x, R, 3) == pytest.approx(expected, rel=1e-14)


def test_robin_ball_formula_all_dims():
    rng = np.random.default_rng(7)
    for _ in range(20):
        N = int(rng.choice([3, 4, 5]))
        R = float(rng.uniform(0.5, 2.0))
        x = rng.uniform(-0.4, 0.4, 3) * R
        phi = robin_ball(x, R, N)
        r2 = float(x @ x)
        exact = -R ** (N - 2.0) / ((N - 2.0) * __import__(
            "nearcrit.hyperbola", fromlist=["sigma_n"]).sigma_n(N)
            * (R**2 - r2) ** (N - 2.0))
        assert phi == pytest.approx(exact, rel=1e-14)


def test_robin_outside_raises():
    with pytest.raises(DomainError):
        robin_ball((1.5, 0, 0), 1.0, 3)


def test_poisson_kernel_normalization():
    ball = unit_ball()
    pts, nrm, w = ball.surface_quadrature(48)
    for x0 in [(0, 0, 0), (0.3, -0.2, 0.1)]:
        P = poisson_kernel_ball(np.array(x0), pts, 1.0, 3)
        assert np.dot(w, P) == pytest.approx(1.0, rel=1e-12)


def test_identity_i_center_and_random():
    ball = unit_ball()
    rep = boundary_identity_check(ball, (0, 0, 0), "i")
    assert rep.lhs == pytest.approx(1.0 / (4 * math.pi), rel=1e-12)
    assert rep.rel_residual < 1e-10
    rng = np.random.default_rng(1)
    for _ in range(5):
        x0 = rng.uniform(-0.5, 0.5, 3)
        rep = boundary_identity_check(ball, x0, "i")
        assert rep.rel_residual < 1e-9


def test_identity_vec():
    ball = unit_ball()
    rep = boundary_identity_check(ball, (0, 0, 0), "vec")
    assert np.linalg.norm(rep.lhs) < 1e-10
    rep = boundary_identity_check(ball, (0.3, 0.2, -0.1), "vec")
    assert rep.rel_residual < 1e-10
    assert np.allclose(rep.rhs, -grad_robin_ball((0.3, 0.2, -0.1), 1.0, 3))


def test_iterated_green_near_origin_coefficient():
    # near the source Gt ~ c_p |y|^{-(p(N-2)-2)} with
    # c_p = 4/(4 pi)^{5/2} at p=2.5, N=3
    cp = iterated_singular_coefficient(2.5, 3)
    assert cp == pytest.approx(4.0 / (4.0 * math.pi) ** 2.5, rel=1e-14)
    gt = RadialIteratedGreen(1.0, 2.5, 3)
    for r in (1e-5, 1e-6):
        assert gt(r) * r**0.5 / cp == pytest.approx(1.0, abs=2e-2)


def test_iterated_green_radial_residual():
    # -Delta Gt = G^p checked by second differences of the field (dense
    # nodes so the interpolation error stays below the FD truncation)
    gt = RadialIteratedGreen(1.0, 2.5, 3, n_nodes=200000)
    kN = newton_constant(3)
    for r in (0.2, 0.4, 0.7):
        h = 1e-3
        vals = gt(np.array([r - h, r, r + h]))
        lap = (vals[2] - 2 * vals[1] + vals[0]) / h**2 \
            + (vals[2] - vals[0]) / (h * r)
        src = (kN * (1.0 / r - 1.0)) ** 2.5
        assert -lap == pytest.approx(src, rel=5e-4)


def test_iterated_green_requires_subcritical():
    with pytest.raises(RegimeError):
        RadialIteratedGreen(1.0, 5.0, 3)
    with pytest.raises(RegimeError):
        tilde_robin_center_ball(1.0, 3.0, 3)


def test_tilde_robin_center_semianalytic():
    # independent evaluation of phi_t(0) at p=5/2 on the unit ball from
    # the beta-function form of the radial double integral
    from scipy.special import beta as B
    import scipy.integrate as si
    D = si.quad(lambda s: s**-1.5 * ((1 - s)**2.5 - 1.0), 0, 1)[0]
    exact = (4 * math.pi) ** -2.5 * (-B(0.5, 3.5) - 2.0 + D)
    val = tilde_robin_center_ball(1.0, 2.5, 3)
    assert val == pytest.approx(exact, rel=1e-7)


def test_tilde_robin_interface():
    pt, grad, diag = tilde_robin(unit_ball(), 2.5, (0, 0, 0))
    assert pt < 0
    assert np.allclose(grad, 0.0)
    assert diag["fit_rms"] < 1e-8


def test_subtraction_order():
    # Gt - c_p delta^{-1/2} converges to phi_t at the rate delta^{N-p(N-2)}
    gt = RadialIteratedGreen(1.0, 2.5, 3)
    cp = iterated_singular_coefficient(2.5, 3)
    pt = tilde_robin_center_ball(1.0, 2.5, 3)
    deltas = 0.02 * 0.5 ** np.arange(4)
    gaps = np.abs(gt(deltas) - cp * deltas**-0.5 - pt)
    rates = gaps[:-1] / gaps[1:]
    assert np.allclose(rates, 2.0 ** 0.5, rtol=0.15)


def test_identity_ii_dual_route():
    ball = unit_ball()
    pt, _, _ = tilde_robin(ball, 2.5, (0, 0, 0))
    rep = boundary_identity_check(ball, (0, 0, 0), "ii", p=2.5, phi_t=pt)
    assert rep.rel_residual < 1e-3
    assert rep.details["q"] == pytest.approx(20.0)
    # both sides equal -(N/(q+1)) g-tilde diagonal = alpha |phi_t|
    assert rep.rhs == pytest.approx((3.0 / 21.0) * abs(pt), rel=1e-12)


def test_offcenter_quadrature_crosscheck():
    # radial route against the dense Newton-potential volume quadrature
    ball = unit_ball()
    gt = RadialIteratedGreen(1.0, 2.5, 3)
    y = np.array([0.37, 0.11, -0.21])
    v_quad = iterated_green_quadrature(ball, 2.5, np.zeros(3), y)
    assert v_quad == pytest.approx(gt(np.linalg.norm(y)), rel=1e-4)


def test_box_green_and_reciprocity():
    box = unit_cube()
    x = np.array([0.3, 0.4, 0.5])
    y = np.array([0.62, 0.55, 0.47])
    bx = green_box(box, x, n=41)
    by = green_box(box, y, n=41)
    gxy = bx.values(y)[0]
    gyx = by.values(x)[0]
    assert gxy == pytest.approx(gyx, rel=5e-2)
    assert bx.phi < 0


def test_box_robin_two_routes():
    box = unit_cube()
    r1, r2, err = box_robin_two_routes(box, (0.5, 0.5, 0.5), n=33)
    assert abs(r1 - r2) <= err


def test_box_identity_i_flagged():
    rep = boundary_identity_check(unit_cube(), (0.5, 0.5, 0.5), "i",
                                  grid_n=33)
    assert rep.details["outside_smoothness_hypotheses"] is True
    assert rep.rel_residual < 0.05


def test_box_iterated_green_residual():
    box = unit_cube()
    big = iterated_green_box(box, 2.5, (0.5, 0.5, 0.5), n=33)
    bg = green_box(box, (0.5, 0.5, 0.5), n=33)
    r = big.grid.interior_radii(big.x0)
    kN = newton_constant(3)
    with np.errstate(divide="ignore"):
        s = kN**2.5 * np.where(r > 0, r, np.inf) ** -2.5
    rem = np.maximum(bg.field_interior(), 0.0) ** 2.5 - s
    idx = big.grid.nearest_interior_node(big.x0)
    rem[idx] = 0.0
    bc = poisson.boundary_values(
        lambda pts: -big.c_p * np.linalg.norm(pts - big.x0, axis=-1)
        ** (2.0 - 2.5), big.grid)
    res = poisson.neg_laplacian(big.psi, big.grid, bc=bc) - rem
    mask = r > 4 * max(big.grid.h)
    assert np.max(np.abs(res[mask])) < 1e-10


def test_bundle_assembly():
    bundle = build_bundle(unit_ball(), np.zeros(3), p=2.5, identities=True)
    d = bundle.as_dict()
    assert set(d) >= {"domain", "x0", "phi", "grad_phi", "phi_t",
                      "grad_phi_t", "p", "q", "residuals"}
    assert d["phi"] == pytest.approx(-1.0 / (4 * math.pi), rel=1e-12)
    assert d["q"] == pytest.approx(20.0)
    assert bundle.residuals["identity_i_rel"] < 1e-9
    assert bundle.residuals["identity_ii_rel"] < 1e-3
    with pytest.raises(DomainError):
        build_bundle(unit_ball(), (2.0, 0.0, 0.0))


def test_box_bundle_flagged():
    bundle = build_bundle(unit_cube(), (0.5, 0.5, 0.5), grid_n=25)
    assert bundle.flags.get("outside_smoothness_hypotheses") is True
    assert bundle.phi < 0
