"""Variational and viscosity solvers for 1-d evolutive Hamilton-Jacobi problems."""

from .gridfn import GridFunction, make_initial_condition
from .hamiltonians import (
    HamiltonianModel,
    PhasePoint,
    cutoff_compact_support,
    get_model,
    legendre_transform,
    localization_radii,
    max_step_delta1,
    twist_step_bound,
)
from .flow import Trajectory, integrate_flow
from .generating import (
    FamilyPoint,
    Subdivision,
    critical_points_S,
    eval_F,
    eval_S,
    quadratic_normal_form,
)
from .selector import (
    SaddleLandscape,
    SelectorResult,
    axiom_audit,
    reduce_convex_fiber,
    sigma_coercive,
    sigma_mountain_pass,
    sigma_opposite,
)
from .operators import (
    IterationSchedule,
    OperatorConfig,
    Wavefront,
    hopf_lax,
    iterated_operator,
    lax_oleinik_step,
    nonmarkov_defect,
    variational_step,
    wavefront,
)
from .viscosity_fd import (
    FDConfig,
    convergence_study,
    solve_lax_friedrichs,
    sup_distance,
)
from .config import ProblemConfig, load_problem
from .runner import RunResult, export, run_solve

__version__ = "0.1.0"
