"""Optimal menus, single contracts and randomized menus by exact enumeration.

A deterministic menu that induces a fixed action per type is optimal among
menus inducing that action profile iff its payments solve one linear program,
so the global optimum is the best value over all n^K profile LPs.  The
enumeration is guarded by a budget (default 10^5 LPs, overridable via the
CONTRACTOPT_LP_BUDGET environment variable) and ties between equally good
profiles go to the lexicographically smallest profile.

Randomized menus avoid enumeration entirely: with the substitution
z^{i,theta} = weight(i; theta) * p^{i,theta} the whole problem is one LP (see
solve_randomized_menu for the linearization argument), and contracts are
recovered from (z, weights) afterwards, including the degenerate zero-weight
rows.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from contractopt import lp as lp_mod
from contractopt.agent import verify_ic, verify_randomized_ic
from contractopt.core import (
    Contract,
    Instance,
    Menu,
    RandomizedMenu,
    SingleParamInstance,
    SolveReport,
    ZERO,
    menu_utilities,
    principal_utility,
    randomized_agent_utility,
    randomized_principal_utility,
    validate,
)
from contractopt.errors import BudgetExceededError, TheoryViolationError, ValidationError

DEFAULT_LP_BUDGET = 100_000
BUDGET_ENV_VAR = "CONTRACTOPT_LP_BUDGET"


def lp_budget() -> int:
    raw = os.environ.get(BUDGET_ENV_VAR)
    if raw is None:
        return DEFAULT_LP_BUDGET
    value = int(raw)
    if value <= 0:
        raise ValueError(f"{BUDGET_ENV_VAR} must be positive, got {raw!r}")
    return value


def require_valid(instance: Instance) -> None:
    violations = validate(instance)
    if violations:
        raise ValidationError(violations)


def build_report(
    instance: Instance,
    objective: Fraction,
    solution,
    *,
    certificate=None,
    profile=None,
    notes: Sequence[str] = (),
) -> SolveReport:
    """Assemble a report, recomputing the objective from the solution.

    Refuses to construct a report whose stated objective is not exactly the
    expected principal utility of the embedded solution.
    """
    if isinstance(solution, Menu):
        value = principal_utility(instance, solution)
        agents, principals = menu_utilities(instance, solution)
    elif isinstance(solution, RandomizedMenu):
        value = randomized_principal_utility(instance, solution)
        agents = tuple(
            randomized_agent_utility(instance, k, solution) for k in range(instance.num_types)
        )
        principals = tuple(
            sum(
                (
                    solution.weights[k][i]
                    * (
                        instance.expected_reward(k, i)
                        - Contract(solution.payments[k][i]).expected_payment(
                            instance.transition_row(k, i)
                        )
                    )
                    for i in range(instance.num_actions)
                    if solution.weights[k][i]
                ),
                ZERO,
            )
            for k in range(instance.num_types)
        )
    else:
        raise TypeError(f"cannot build a report around {type(solution).__name__}")
    if value != objective:
        raise TheoryViolationError(
            f"stated objective {objective} differs from recomputed utility {value}"
        )
    return SolveReport(
        objective=objective,
        solution=solution,
        agent_utilities=agents,
        principal_utilities=principals,
        certificate=certificate,
        profile=tuple(profile) if profile is not None else None,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# profile LPs


@dataclass(frozen=True)
class ProfileSolution:
    profile: tuple[int, ...]
    status: str  # mirrors LpResult.status
    value: Fraction | None
    menu: Menu | None
    lp_result: lp_mod.LpResult | None = None


def menu_program(
    instance: Instance, profile: Sequence[int], limited_liability: bool = True
) -> lp_mod.LinearProgram:
    """LP over menu payments for a fixed action profile.

    Variables are the K*m payments p^k_w.  For every (type k, report k',
    action i) the recommended pair must win:

        <F^k_{a_k}, p^k> - cost(k, a_k) >= <F^k_i, p^k'> - cost(k, i)

    With liability off the payments become free variables and explicit
    participation rows <F^k_{a_k}, p^k> >= cost(k, a_k) are added (without
    them payments could be pushed arbitrarily negative).
    """
    K = instance.num_types
    n = instance.num_actions
    m = instance.num_outcomes
    profile = tuple(profile)
    if len(profile) != K or any(not 0 <= a < n for a in profile):
        raise ValueError(f"profile {profile} does not fit instance with {K} types, {n} actions")
    num_vars = K * m
    objective = [ZERO] * num_vars
    for k in range(K):
        mu = instance.prior[k]
        row = instance.transition_row(k, profile[k])
        for w in range(m):
            objective[k * m + w] = -mu * row[w]
    lhs = []
    rhs = []
    senses = []
    for k in range(K):
        rec_row = instance.transition_row(k, profile[k])
        rec_cost = instance.action_cost(k, profile[k])
        for rep in range(K):
            for i in range(n):
                if rep == k and i == profile[k]:
                    continue
                coeffs = [ZERO] * num_vars
                for w in range(m):
                    coeffs[k * m + w] += rec_row[w]
                alt_row = instance.transition_row(k, i)
                for w in range(m):
                    coeffs[rep * m + w] -= alt_row[w]
                lhs.append(tuple(coeffs))
                rhs.append(rec_cost - instance.action_cost(k, i))
                senses.append(lp_mod.GREATER_EQUAL)
        if not limited_liability:
            coeffs = [ZERO] * num_vars
            for w in range(m):
                coeffs[k * m + w] = rec_row[w]
            lhs.append(tuple(coeffs))
            rhs.append(rec_cost)
            senses.append(lp_mod.GREATER_EQUAL)
    return lp_mod.LinearProgram(
        objective=tuple(objective),
        lhs=tuple(lhs),
        rhs=tuple(rhs),
        senses=tuple(senses),
        nonnegative=(limited_liability,) * num_vars,
    )


def single_program(
    instance: Instance, profile: Sequence[int], limited_liability: bool = True
) -> lp_mod.LinearProgram:
    """Same as menu_program but with one shared payment vector."""
    K = instance.num_types
    n = instance.num_actions
    m = instance.num_outcomes
    profile = tuple(profile)
    if len(profile) != K or any(not 0 <= a < n for a in profile):
        raise ValueError(f"profile {profile} does not fit instance with {K} types, {n} actions")
    objective = [ZERO] * m
    for k in range(K):
        mu = instance.prior[k]
        row = instance.transition_row(k, profile[k])
        for w in range(m):
            objective[w] -= mu * row[w]
    lhs = []
    rhs = []
    senses = []
    for k in range(K):
        rec_row = instance.transition_row(k, profile[k])
        rec_cost = instance.action_cost(k, profile[k])
        for i in range(n):
            if i == profile[k]:
                continue
            alt_row = instance.transition_row(k, i)
            coeffs = tuple(rec_row[w] - alt_row[w] for w in range(m))
            lhs.append(coeffs)
            rhs.append(rec_cost - instance.action_cost(k, i))
            senses.append(lp_mod.GREATER_EQUAL)
        if not limited_liability:
            lhs.append(rec_row)
            rhs.append(rec_cost)
            senses.append(lp_mod.GREATER_EQUAL)
    return lp_mod.LinearProgram(
        objective=tuple(objective),
        lhs=tuple(lhs),
        rhs=tuple(rhs),
        senses=tuple(senses),
        nonnegative=(limited_liability,) * m,
    )


def _reward_constant(instance: Instance, profile: Sequence[int]) -> Fraction:
    return sum(
        (instance.prior[k] * instance.expected_reward(k, a) for k, a in enumerate(profile)),
        ZERO,
    )


def solve_menu_for_profile(
    instance: Instance, profile: Sequence[int], limited_liability: bool = True
) -> ProfileSolution:
    """Exact optimum among menus that induce the given action profile."""
    require_valid(instance)
    profile = tuple(profile)
    program = menu_program(instance, profile, limited_liability)
    result = lp_mod.solve_lp(program)
    if result.status != "optimal":
        if result.status == "unbounded":
            raise TheoryViolationError(
                f"profile LP unbounded for profile {profile}; the objective is bounded by design"
            )
        return ProfileSolution(profile, result.status, None, None, result)
    m = instance.num_outcomes
    contracts = [
        Contract(result.solution[k * m : (k + 1) * m]) for k in range(instance.num_types)
    ]
    menu = Menu(contracts, profile)
    value = _reward_constant(instance, profile) + result.objective_value
    return ProfileSolution(profile, "optimal", value, menu, result)


def solve_single_for_profile(
    instance: Instance, profile: Sequence[int], limited_liability: bool = True
) -> ProfileSolution:
    require_valid(instance)
    profile = tuple(profile)
    program = single_program(instance, profile, limited_liability)
    result = lp_mod.solve_lp(program)
    if result.status != "optimal":
        if result.status == "unbounded":
            raise TheoryViolationError(
                f"profile LP unbounded for profile {profile}; the objective is bounded by design"
            )
        return ProfileSolution(profile, result.status, None, None, result)
    contract = Contract(result.solution)
    menu = Menu([contract] * instance.num_types, profile)
    value = _reward_constant(instance, profile) + result.objective_value
    return ProfileSolution(profile, "optimal", value, menu, result)


def _profile_values(
    instance: Instance,
    profiles: Iterable[tuple[int, ...]],
    single: bool,
    limited_liability: bool,
    workers: int,
):
    solver = solve_single_for_profile if single else solve_menu_for_profile
    if workers <= 1:
        for profile in profiles:
            yield solver(instance, profile, limited_liability)
        return
    profiles = list(profiles)
    chunk = max(1, len(profiles) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        args = ((instance, p, single, limited_liability) for p in profiles)
        yield from pool.map(_profile_task, args, chunksize=chunk)


def _profile_task(args):
    instance, profile, single, limited_liability = args
    solver = solve_single_for_profile if single else solve_menu_for_profile
    return solver(instance, profile, limited_liability)


def _enumerate(
    instance: Instance,
    *,
    single: bool,
    limited_liability: bool,
    budget: int | None,
    workers: int,
) -> SolveReport:
    require_valid(instance)
    K = instance.num_types
    n = instance.num_actions
    total = n**K
    cap = lp_budget() if budget is None else budget
    if total > cap:
        raise BudgetExceededError(
            f"profile enumeration needs {total} = {n}^{K} LPs, which exceeds the budget of {cap}"
        )
    best: ProfileSolution | None = None
    profiles = itertools.product(range(n), repeat=K)
    for sol in _profile_values(instance, profiles, single, limited_liability, workers):
        if sol.status != "optimal":
            continue
        if best is None or sol.value > best.value:
            best = sol
    if best is None:
        raise TheoryViolationError(
            "every profile LP was infeasible; the all-opt-out profile is always feasible"
        )
    certificate = verify_ic(instance, best.menu, 0)
    if not certificate.passed:
        raise TheoryViolationError(
            "enumeration produced a menu that fails exact IC verification"
        )
    return build_report(
        instance,
        best.value,
        best.menu,
        certificate=certificate,
        profile=best.profile,
    )


def solve_optimal_menu(
    instance: Instance,
    *,
    limited_liability: bool = True,
    budget: int | None = None,
    workers: int = 1,
) -> SolveReport:
    """Optimal deterministic menu by enumeration over action profiles."""
    return _enumerate(
        instance,
        single=False,
        limited_liability=limited_liability,
        budget=budget,
        workers=workers,
    )


def solve_optimal_single(
    instance: Instance,
    *,
    limited_liability: bool = True,
    budget: int | None = None,
    workers: int = 1,
) -> SolveReport:
    """Optimal single contract: the menu program with all payments shared."""
    return _enumerate(
        instance,
        single=True,
        limited_liability=limited_liability,
        budget=budget,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# randomized menus


def randomized_program(
    instance: SingleParamInstance, limited_liability: bool = True
) -> lp_mod.LinearProgram:
    """One LP for the optimal menu of randomized contracts.

    Variables, per type k: z^{i,k} in R^m (the weight-scaled payments), the
    lottery weights w(i;k), and epigraph variables u[k][k'][i].  The truthful
    constraint for (k, k') is

        sum_i <F_i, z^{i,k}> - theta_k w(i;k) c_i
            >= sum_i max_{i'} ( <F_{i'}, z^{i,k'}> - theta_k w(i;k') c_{i'} )

    whose right side is linearized by u[k][k'][i] >= every inner term.  The
    linearization is exact: u appears in no other row and no objective term,
    so a (z, w) pair is feasible with some u iff it is feasible with
    u[k][k'][i] = max_{i'}(...), which is the original constraint.

    With liability off, z becomes free and explicit participation rows are
    added (the truthful value of each type must be non-negative); without
    them the program is unbounded.
    """
    if not isinstance(instance, SingleParamInstance):
        raise TypeError("randomized menus are solved on single-parameter instances")
    K = instance.num_types
    n = instance.num_actions
    m = instance.num_outcomes
    num_z = K * n * m
    num_w = K * n

    def z_idx(k, i, w):
        return (k * n + i) * m + w

    def w_idx(k, i):
        return num_z + k * n + i

    def u_idx(k, rep, i):
        return num_z + num_w + (k * K + rep) * n + i

    num_vars = num_z + num_w + K * K * n
    objective = [ZERO] * num_vars
    for k in range(K):
        mu = instance.prior[k]
        for i in range(n):
            objective[w_idx(k, i)] = mu * instance.expected_reward(k, i)
            row = instance.transitions[i]
            for w in range(m):
                objective[z_idx(k, i, w)] = -mu * row[w]

    lhs = []
    rhs = []
    senses = []

    def truthful_coeffs(coeffs, k, sign=1):
        theta = instance.types[k]
        for i in range(n):
            row = instance.transitions[i]
            for w in range(m):
                coeffs[z_idx(k, i, w)] += sign * row[w]
            coeffs[w_idx(k, i)] -= sign * theta * instance.unit_costs[i]

    for k in range(K):
        coeffs = [ZERO] * num_vars
        for i in range(n):
            coeffs[w_idx(k, i)] = Fraction(1)
        lhs.append(tuple(coeffs))
        rhs.append(Fraction(1))
        senses.append(lp_mod.EQUAL)

    for k in range(K):
        theta = instance.types[k]
        for rep in range(K):
            coeffs = [ZERO] * num_vars
            truthful_coeffs(coeffs, k)
            for i in range(n):
                coeffs[u_idx(k, rep, i)] -= 1
            lhs.append(tuple(coeffs))
            rhs.append(ZERO)
            senses.append(lp_mod.GREATER_EQUAL)
            for i in range(n):
                for alt in range(n):
                    coeffs = [ZERO] * num_vars
                    coeffs[u_idx(k, rep, i)] = Fraction(1)
                    row = instance.transitions[alt]
                    for w in range(m):
                        coeffs[z_idx(rep, i, w)] -= row[w]
                    coeffs[w_idx(rep, i)] += theta * instance.unit_costs[alt]
                    lhs.append(tuple(coeffs))
                    rhs.append(ZERO)
                    senses.append(lp_mod.GREATER_EQUAL)
        if not limited_liability:
            coeffs = [ZERO] * num_vars
            truthful_coeffs(coeffs, k)
            lhs.append(tuple(coeffs))
            rhs.append(ZERO)
            senses.append(lp_mod.GREATER_EQUAL)

    nonnegative = [True] * num_vars
    for idx in range(num_z):
        nonnegative[idx] = limited_liability
    for k in range(K):
        for rep in range(K):
            for i in range(n):
                nonnegative[u_idx(k, rep, i)] = False
    return lp_mod.LinearProgram(
        objective=tuple(objective),
        lhs=tuple(lhs),
        rhs=tuple(rhs),
        senses=tuple(senses),
        nonnegative=tuple(nonnegative),
    )


def recover_randomized_contracts(
    instance: SingleParamInstance,
    weights: Sequence[Sequence[Fraction]],
    scaled_payments: Sequence[Sequence[Sequence[Fraction]]],
) -> RandomizedMenu:
    """Turn an LP point (z, weights) back into explicit contracts.

    Rows with positive weight divide out the weight.  A row with zero weight
    but nonzero z is never sampled, yet its z still enters the truthful side
    of the constraints; dropping it would change the agent's utility.  The
    fix: zero that contract and add its expected value <F_i, z^{i,k}> to
    every payment of the sampled contracts, which preserves the truthful
    utility exactly (rows are stochastic) and can only raise the deviation
    value of this type's lottery seen by others by the same constant.
    """
    K = instance.num_types
    n = instance.num_actions
    m = instance.num_outcomes
    payments = []
    for k in range(K):
        degenerate = ZERO
        for i in range(n):
            if weights[k][i] == 0 and any(z != 0 for z in scaled_payments[k][i]):
                row = instance.transitions[i]
                degenerate += sum(
                    (f * z for f, z in zip(row, scaled_payments[k][i])), ZERO
                )
        per_type = []
        for i in range(n):
            w = weights[k][i]
            if w == 0:
                per_type.append((ZERO,) * m)
            else:
                per_type.append(
                    tuple(z / w + degenerate for z in scaled_payments[k][i])
                )
        payments.append(tuple(per_type))
    return RandomizedMenu(weights=tuple(tuple(w for w in row) for row in weights), payments=tuple(payments))


def solve_randomized_menu(
    instance: SingleParamInstance, *, limited_liability: bool = True
) -> SolveReport:
    """Optimal menu of randomized contracts via the scaled-payment LP."""
    require_valid(instance)
    program = randomized_program(instance, limited_liability)
    result = lp_mod.solve_lp(program)
    if result.status != "optimal":
        raise TheoryViolationError(
            f"randomized-menu LP reported {result.status}; it is feasible and bounded by design"
        )
    K = instance.num_types
    n = instance.num_actions
    m = instance.num_outcomes
    x = result.solution
    weights = [[x[K * n * m + k * n + i] for i in range(n)] for k in range(K)]
    z = [[[x[(k * n + i) * m + w] for w in range(m)] for i in range(n)] for k in range(K)]
    rmenu = recover_randomized_contracts(instance, weights, z)
    value = randomized_principal_utility(instance, rmenu)
    if value != result.objective_value:
        raise TheoryViolationError(
            "recovered randomized menu does not attain the LP value exactly"
        )
    certificate = verify_randomized_ic(instance, rmenu, 0)
    if not certificate.passed:
        raise TheoryViolationError(
            "recovered randomized menu fails exact constraint verification"
        )
    return build_report(instance, value, rmenu, certificate=certificate)
