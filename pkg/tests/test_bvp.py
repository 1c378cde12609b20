import math

import numpy as np
import pytest

from nearcrit.asymptotics import pohozaev_residual
from nearcrit.bvp import (first_dirichlet_eigenvalue, peak_report,
                          perturbation_params, rescale_solution,
                          run_continuation, solve_ball_radial, solve_box_fd)
from nearcrit.errors import (DomainError, InfeasibleParameters,
                             ResolutionError)
from nearcrit.geometry import unit_cube
from nearcrit.groundstate import find_ground_state
from nearcrit.hyperbola import sigma_n, system_params


@pytest.fixture(scope="module")
def ball_sol():
    return solve_ball_radial(system_params(5, 3, 0.2), R=1.0)


@pytest.fixture(scope="module")
def gs53():
    return find_ground_state(system_params(5, 3), tol=1e-9)


def test_qeps_at_eps02():
    sp = system_params(5, 3, 0.2)
    assert sp.q_eps == pytest.approx(30.0 / 7.0 - 1.0, rel=1e-14)


def test_ball_solution_contract(ball_sol):
    sol = ball_sol
    assert sol.u[0] == pytest.approx(sol.u_max, rel=1e-12)
    assert np.allclose(sol.x_peak, 0.0)
    assert sol.mu == pytest.approx(sol.u_max ** (-1.0 / sol.params.alpha_eps),
                                   rel=1e-14)
    # positive, decreasing, vanishing at the boundary
    assert np.all(sol.u[:-1] > 0) and np.all(sol.v[:-1] > 0)
    assert np.all(np.diff(sol.u) <= 1e-9 * sol.u_max)
    assert abs(sol.u[-1]) < 1e-8 * sol.u_max
    assert sol.du_dn < 0 and sol.dv_dn < 0


def test_ball_pohozaev(ball_sol):
    rep = pohozaev_residual(ball_sol)
    assert rep.rel_residual < 1e-6
    # base-point independence (the vector identity)
    rep2 = pohozaev_residual(ball_sol, y=(0.3, 0.0, 0.0))
    assert abs(rep.rhs - rep2.rhs) / abs(rep.rhs) < 1e-6


def test_pohozaev_detects_non_solutions(ball_sol):
    import dataclasses
    fake = dataclasses.replace(ball_sol, int_u_q1=ball_sol.int_u_q1 * 1.01)
    rep = pohozaev_residual(fake)
    assert rep.rel_residual == pytest.approx(0.01, rel=0.05)


def test_eps_zero_rejected():
    with pytest.raises(InfeasibleParameters):
        solve_ball_radial(system_params(5, 3, 0.0), R=1.0)


def test_continuation_monotone_tail():
    # past the moderate-eps dip of this branch, u_max grows as eps drops
    sched = [0.12 * 0.8 ** k for k in range(6)]
    run = run_continuation(5, 3, sched, R=1.0)
    um = [s.u_max for s in run.solutions]
    assert len(run.solutions) == len(sched)
    assert all(np.diff(um) > 0)


def test_continuation_validates_schedule():
    with pytest.raises(DomainError):
        run_continuation(5, 3, [0.1, 0.2], R=1.0)
    with pytest.raises(DomainError):
        run_continuation(5, 3, [0.2, -0.1], R=1.0)


def test_rescale_solution(ball_sol, gs53):
    rep = rescale_solution(ball_sol, gs53)
    assert rep.mu == pytest.approx(ball_sol.mu)
    assert rep.mu_pow_eps == pytest.approx(ball_sol.mu ** 0.2, rel=1e-12)
    assert rep.sup_dist_u < 0.3
    assert rep.dom_ratio_u < 2.0 and rep.dom_ratio_v < 2.0


def test_mu_normalization_algebra():
    # mu^{alpha_eps} u_max = 1
    assert 16.0 ** (-1.0 / 0.6) == pytest.approx(16.0 ** (-5.0 / 3.0))
    sp = system_params(5, 3, 0.3)
    sol = solve_ball_radial(sp, R=1.0)
    assert sol.mu ** sp.alpha_eps * sol.u_max == pytest.approx(1.0,
                                                               rel=1e-12)


def test_first_dirichlet_eigenvalue():
    # ball of radius 1 in N=3: lambda_1 = pi^2
    assert first_dirichlet_eigenvalue(1.0, 3) == pytest.approx(
        math.pi**2, rel=1e-10)


def test_perturbed_ball_solution():
    # (p=1, N=9) at moderate eps: the blow-up frame is well conditioned
    pp = perturbation_params(1.0, 9.0, 300.0)
    sol = solve_ball_radial(pp, R=1.0, mode="perturbation")
    assert sol.u_max > 10
    assert sol.mode == "perturbation"
    assert sol.diagnostics["boundary_zero_rel_err"] < 1e-4
    # perturbed Pohozaev: eps (N/2 - alpha) int u^2 = boundary integral
    lhs = sol.eps * (9.0 / 2.0 - pp.alpha) * sol.int_u2
    rhs = sigma_n(9) * sol.du_dn * sol.dv_dn
    assert lhs == pytest.approx(rhs, rel=1e-3)
    rep = pohozaev_residual(sol)
    assert rep.rel_residual < 1e-3


def test_box_smoke_and_resolution_guard():
    sp = system_params(5, 3, 0.3)
    with pytest.raises(ResolutionError):
        solve_box_fd(sp, unit_cube(), n=25)


def test_box_solution_and_refinement():
    # eps large enough that 49^3 resolves the peak
    sp = system_params(5, 3, 0.4)
    s49 = solve_box_fd(sp, unit_cube(), n=49)
    s65 = solve_box_fd(sp, unit_cube(), n=65)
    assert abs(s49.u_max - s65.u_max) / s65.u_max < 0.05
    rep = peak_report(s65)
    assert rep["n_peaks"] == 1
    assert rep["peak_to_center_cells"] <= 1.0
    assert np.all(s65.u_field > 0) and np.all(s65.v_field > 0)


def test_box_pohozaev_reported():
    sp = system_params(5, 3, 0.4)
    sol = solve_box_fd(sp, unit_cube(), n=49)
    rep = pohozaev_residual(sol)
    assert rep.rel_residual < 0.05      # second-order traces: reported
