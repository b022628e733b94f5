"""Exact rational-arithmetic toolkit for Bayesian principal-agent contract design."""

from contractopt.agent import best_menu_choice, best_response, verify_ic
from contractopt.core import (
    Contract,
    Menu,
    MultiParamInstance,
    RandomizedMenu,
    SingleParamInstance,
    SolveReport,
    agent_utility,
    principal_utility,
    randomized_principal_utility,
    validate,
)
from contractopt.errors import (
    BudgetExceededError,
    RankDeficiencyError,
    TheoryViolationError,
    ValidationError,
)
from contractopt.gap import build_gap_instance, build_gap_menu
from contractopt.lifting import (
    backward_diagnostics,
    exact_recover,
    ic_repair,
    lift_backward,
    lift_forward,
)
from contractopt.lp import LinearProgram, LpResult, solve_lp
from contractopt.reduction import (
    ReductionMap,
    ReductionParams,
    check_regularity,
    reduce_instance,
    suggest_epsilon,
)
from contractopt.solvers import (
    solve_menu_for_profile,
    solve_optimal_menu,
    solve_optimal_single,
    solve_randomized_menu,
    solve_single_for_profile,
)
from contractopt.unrestricted import iron, solve_unrestricted, virtual_costs

__all__ = [
    "Contract",
    "Menu",
    "MultiParamInstance",
    "RandomizedMenu",
    "SingleParamInstance",
    "SolveReport",
    "agent_utility",
    "principal_utility",
    "randomized_principal_utility",
    "validate",
    "best_menu_choice",
    "best_response",
    "verify_ic",
    "BudgetExceededError",
    "RankDeficiencyError",
    "TheoryViolationError",
    "ValidationError",
    "LinearProgram",
    "LpResult",
    "solve_lp",
    "solve_menu_for_profile",
    "solve_optimal_menu",
    "solve_optimal_single",
    "solve_randomized_menu",
    "solve_single_for_profile",
    "ReductionMap",
    "ReductionParams",
    "check_regularity",
    "reduce_instance",
    "suggest_epsilon",
    "lift_forward",
    "lift_backward",
    "ic_repair",
    "exact_recover",
    "backward_diagnostics",
    "build_gap_instance",
    "build_gap_menu",
    "iron",
    "solve_unrestricted",
    "virtual_costs",
]
