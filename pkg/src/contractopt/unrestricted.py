"""Optimal single contract without limited liability on rank-n instances.

The screening route: exact discrete virtual costs, ironing by convex
envelope, a deterministic cost-monotone allocation maximizing virtual
welfare, payments pinned by binding adjacent constraints, and one exact
linear solve identifying a contract that implements those payments.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from contractopt.agent import best_response, verify_ic
from contractopt.core import Contract, Menu, SingleParamInstance, SolveReport
from contractopt.errors import RankDeficiencyError, TheoryViolationError
from contractopt.solvers import build_report, require_valid, solve_randomized_menu

ZERO = Fraction(0)


@dataclass(frozen=True)
class VirtualCostTable:
    """Per-type virtual costs, their ironed version, and cumulative mass."""

    phi: tuple[Fraction, ...]
    phi_bar: tuple[Fraction, ...] | None
    cumulative_mass: tuple[Fraction, ...]  # M(theta_k) for k = 1..K

    @property
    def regular(self) -> bool:
        return all(a <= b for a, b in zip(self.phi, self.phi[1:]))


@dataclass(frozen=True)
class RankCertificate:
    """Row-rank evidence for a transition matrix, from exact elimination."""

    rank: int
    num_rows: int
    pivot_columns: tuple[int, ...]
    dependent_rows: tuple[int, ...]

    @property
    def full_row_rank(self) -> bool:
        return self.rank == self.num_rows


@dataclass(frozen=True)
class AllocationPlan:
    """Deterministic allocation with its implementing expected payments."""

    actions: tuple[int, ...]  # a(theta_k) per type
    expected_payments: tuple[Fraction, ...]  # z per type
    action_payments: tuple[Fraction, ...]  # T per action, 0 when unallocated
    table: VirtualCostTable
    rank: RankCertificate
    virtual_welfare: Fraction


def virtual_costs(instance: SingleParamInstance) -> VirtualCostTable:
    """phi(theta_k) = theta_k + (theta_k - theta_{k-1}) M(theta_{k-1}) / mu_k.

    theta_0 is taken as 0 with M(theta_0) = 0, which zeroes the correction
    for the lowest type.
    """
    types = instance.types
    if any(a >= b for a, b in zip(types, types[1:])):
        raise ValueError("virtual costs need strictly increasing types")
    phi = []
    cumulative = []
    mass = ZERO
    prev_type = ZERO
    for theta, mu in zip(types, instance.prior):
        phi.append(theta + (theta - prev_type) * mass / mu)
        mass += mu
        cumulative.append(mass)
        prev_type = theta
    return VirtualCostTable(phi=tuple(phi), phi_bar=None, cumulative_mass=tuple(cumulative))


def iron(
    table: VirtualCostTable,
    prior: Sequence[Fraction],
    weight_by_mass: bool = True,
) -> VirtualCostTable:
    """Fill phi_bar with the slopes of the lower convex envelope.

    The envelope is taken over the cumulative points (M(theta_k),
    sum_{i<=k} mu_i phi_i); pooled types share the mass-weighted average of
    their phi.  weight_by_mass=False pools by index instead (uniform
    weights), the alternative convention.
    """
    K = len(table.phi)
    if weight_by_mass:
        xs = [ZERO] + list(table.cumulative_mass)
        ys = [ZERO]
        for mu, phi in zip(prior, table.phi):
            ys.append(ys[-1] + mu * phi)
    else:
        xs = [Fraction(k) for k in range(K + 1)]
        ys = [ZERO]
        for phi in table.phi:
            ys.append(ys[-1] + phi)

    # lower hull of the cumulative curve; slopes are non-decreasing
    hull: list[int] = [0]
    for j in range(1, K + 1):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above segment a->j
            if (ys[b] - ys[a]) * (xs[j] - xs[a]) >= (ys[j] - ys[a]) * (xs[b] - xs[a]):
                hull.pop()
            else:
                break
        hull.append(j)

    phi_bar: list[Fraction] = []
    for a, b in zip(hull, hull[1:]):
        slope = (ys[b] - ys[a]) / (xs[b] - xs[a])
        phi_bar.extend([slope] * (b - a))
    return VirtualCostTable(
        phi=table.phi, phi_bar=tuple(phi_bar), cumulative_mass=table.cumulative_mass
    )


def row_rank(transitions: Sequence[Sequence[Fraction]]) -> RankCertificate:
    """Exact Gaussian elimination; reports which rows turned dependent."""
    rows = [list(r) for r in transitions]
    n = len(rows)
    m = len(rows[0]) if rows else 0
    labels = list(range(n))
    pivots = []
    r = 0
    for col in range(m):
        piv = next((i for i in range(r, n) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        labels[r], labels[piv] = labels[piv], labels[r]
        inv = rows[r][col]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(n):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == n:
            break
    dependent = tuple(sorted(labels[r:]))
    return RankCertificate(rank=r, num_rows=n, pivot_columns=tuple(pivots), dependent_rows=dependent)


def maximize_virtual_welfare(
    instance: SingleParamInstance, weight_by_mass: bool = True
) -> AllocationPlan:
    """Argmax of R_a - c_a * phi_bar per type, with the payment recursion.

    Ties prefer the smaller cost, then the smaller action index; this makes
    the allocation cost-monotone (asserted, not assumed).
    """
    require_valid(instance)
    table = iron(virtual_costs(instance), instance.prior, weight_by_mass)
    K = instance.num_types
    n = instance.num_actions
    expected_rewards = [instance.expected_reward(0, i) for i in range(n)]

    actions = []
    welfare = ZERO
    for k in range(K):
        phi = table.phi_bar[k]
        best = None
        for i in range(n):
            value = expected_rewards[i] - instance.unit_costs[i] * phi
            key = (value, -instance.unit_costs[i], -i)
            if best is None or key > best[0]:
                best = (key, i)
        actions.append(best[1])
        welfare += instance.prior[k] * best[0][0]

    costs = [instance.unit_costs[a] for a in actions]
    for k in range(K - 1):
        if costs[k] < costs[k + 1]:
            raise TheoryViolationError(
                "virtual-welfare allocation is not cost-monotone: "
                f"type {k} gets cost {costs[k]} < type {k + 1} cost {costs[k + 1]}"
            )

    z = [ZERO] * K
    z[K - 1] = instance.types[K - 1] * costs[K - 1]
    for k in range(K - 2, -1, -1):
        z[k] = instance.types[k] * costs[k] + z[k + 1] - instance.types[k] * costs[k + 1]

    action_payments = [ZERO] * n
    for k in range(K):
        action_payments[actions[k]] = z[k]

    return AllocationPlan(
        actions=tuple(actions),
        expected_payments=tuple(z),
        action_payments=tuple(action_payments),
        table=table,
        rank=row_rank(instance.transitions),
        virtual_welfare=welfare,
    )


def single_contract_from_plan(
    instance: SingleParamInstance, plan: AllocationPlan
) -> Contract:
    """Solve F p = T exactly; free columns of the reduced form are pinned to 0.

    Needs full row rank; payments may be negative (liability off by design).
    """
    if not plan.rank.full_row_rank:
        raise RankDeficiencyError(
            plan.rank.rank, plan.rank.num_rows, plan.rank.dependent_rows
        )
    n = instance.num_actions
    m = instance.num_outcomes
    aug = [list(instance.transitions[i]) + [plan.action_payments[i]] for i in range(n)]
    r = 0
    pivot_cols = []
    for col in range(m):
        piv = next((i for i in range(r, n) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = aug[r][col]
        aug[r] = [x / inv for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivot_cols.append(col)
        r += 1
        if r == n:
            break
    payments = [ZERO] * m
    for row, col in enumerate(pivot_cols):
        payments[col] = aug[row][m]
    contract = Contract(payments)
    for i in range(n):
        got = contract.expected_payment(instance.transitions[i])
        if got != plan.action_payments[i]:
            raise TheoryViolationError(
                f"linear solve residual on action {i}: {got} != {plan.action_payments[i]}"
            )
    return contract


def solve_unrestricted(
    instance: SingleParamInstance,
    weight_by_mass: bool = True,
    compare_randomized: bool = True,
) -> SolveReport:
    """Optimal single contract when liability is lifted and rank(F) = n.

    Verifies, exactly: the canonical best response of every type attains the
    planned (agent, principal) utility pair; participation; value equal to
    the maximum virtual welfare; and, unless disabled, dominance over the
    liability-constrained randomized-menu optimum.
    """
    require_valid(instance)
    plan = maximize_virtual_welfare(instance, weight_by_mass)
    contract = single_contract_from_plan(instance, plan)
    K = instance.num_types

    value = ZERO
    for k in range(K):
        a = plan.actions[k]
        planned_agent = plan.expected_payments[k] - instance.action_cost(k, a)
        planned_principal = instance.expected_reward(k, a) - plan.expected_payments[k]
        if planned_agent < 0:
            raise TheoryViolationError(
                f"participation fails for type {k}: utility {planned_agent}"
            )
        br = best_response(instance, k, contract)
        if (br.agent_utility, br.principal_utility) != (planned_agent, planned_principal):
            raise TheoryViolationError(
                f"tie-breaking discrepancy for type {k}: canonical best response "
                f"({br.agent_utility}, {br.principal_utility}) vs planned "
                f"({planned_agent}, {planned_principal})"
            )
        value += instance.prior[k] * planned_principal

    if value != plan.virtual_welfare:
        raise TheoryViolationError(
            f"value {value} does not equal maximum virtual welfare {plan.virtual_welfare}"
        )

    menu = Menu([contract] * K, plan.actions)
    certificate = verify_ic(instance, menu, 0, check_ir=True)
    if not certificate.passed:
        raise TheoryViolationError("payment recursion produced a non-IC contract")

    notes = [
        "allocation " + " ".join(str(a) for a in plan.actions),
        "ironed virtual costs " + " ".join(str(v) for v in plan.table.phi_bar),
    ]
    if compare_randomized:
        randomized = solve_randomized_menu(instance)
        if value < randomized.objective:
            raise TheoryViolationError(
                f"unrestricted value {value} below liability-constrained "
                f"randomized optimum {randomized.objective}"
            )
        notes.append(f"dominates randomized optimum {randomized.objective}")
    return build_report(instance, value, menu, certificate=certificate, notes=notes)
