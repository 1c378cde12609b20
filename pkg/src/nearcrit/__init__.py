"""Numerical laboratory for Lane-Emden systems near the critical
Sobolev hyperbola.

Core surfaces:
  hyperbola    -- exponent algebra, defect eps, tail regimes
  groundstate  -- radial decaying ground states by shooting
  greens       -- Green/Robin functions, iterated Green objects
  bvp          -- nearly critical solves on balls and boxes
  asymptotics  -- Pohozaev checks, rate laws, profile limits
  pipeline     -- end-to-end studies (sweep + checks)
  acceptance   -- pinned desk-scale verification suites
"""

from .hyperbola import (classify_regime, critical_q, qeps_from_eps,
                        sigma_n, system_params)
from .groundstate import find_ground_state, shoot, sobolev_constant
from .greens import (build_bundle, green_ball, robin_ball, tilde_robin,
                     boundary_identity_check)
from .bvp import (rescale_solution, run_continuation, solve_ball_radial,
                  solve_box_fd, perturbation_params)
from .asymptotics import (blowup_law, pohozaev_residual, rate_fit,
                          farfield_profile_error, perturbed_rate_check)
from .pipeline import geometric_schedule, run_rate_study

__version__ = "0.1.0"

__all__ = [
    "classify_regime", "critical_q", "qeps_from_eps", "sigma_n",
    "system_params", "find_ground_state", "shoot", "sobolev_constant",
    "build_bundle", "green_ball", "robin_ball", "tilde_robin",
    "boundary_identity_check", "rescale_solution", "run_continuation",
    "solve_ball_radial", "solve_box_fd", "perturbation_params",
    "blowup_law", "pohozaev_residual", "rate_fit",
    "farfield_profile_error", "perturbed_rate_check",
    "geometric_schedule", "run_rate_study",
]
