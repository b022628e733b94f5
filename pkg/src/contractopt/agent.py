"""Agent-side behavior: best responses and incentive-compatibility checks.

The model pins down behavior only up to ties; the canonical tie-break chain
used everywhere in this package is

    agent utility, then principal utility, then contract index, then action
    index.

The first two steps come from the solution concept (the agent serves the
principal among its own optima); the index steps are a convention, so every
certificate carries a note saying so.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from contractopt.core import (
    Contract,
    Instance,
    Menu,
    RandomizedMenu,
    SingleParamInstance,
    agent_utility,
    principal_type_utility,
)

TIE_BREAK_NOTE = (
    "ties broken by: agent utility, principal utility, contract index, "
    "action index (index steps are a convention)"
)


@dataclass(frozen=True)
class BestResponse:
    action: int
    agent_utility: Fraction
    principal_utility: Fraction
    utilities: tuple[Fraction, ...]  # agent utility of every action
    principal_utilities: tuple[Fraction, ...]


@dataclass(frozen=True)
class ICViolation:
    type_index: int
    reported_type_index: int
    action: Union[int, None]  # None for randomized-menu rows
    deficit: Fraction  # by how much the constraint fails, > 0


@dataclass(frozen=True)
class ICCertificate:
    eta: Fraction
    passed: bool
    violations: tuple[ICViolation, ...]
    constraints_checked: int
    misreport_constraints_checked: int
    ir_checked: bool
    ir_violations: tuple[tuple[int, Fraction], ...]
    constant_menu: bool
    tie_break: str = TIE_BREAK_NOTE


def best_response(instance: Instance, type_index: int, contract: Contract) -> BestResponse:
    """The canonical best action of one type facing one contract."""
    utilities = []
    principal = []
    for action in range(instance.num_actions):
        utilities.append(agent_utility(instance, type_index, contract, action))
        principal.append(principal_type_utility(instance, type_index, contract, action))
    best = 0
    for action in range(1, instance.num_actions):
        if utilities[action] > utilities[best] or (
            utilities[action] == utilities[best] and principal[action] > principal[best]
        ):
            best = action
    return BestResponse(
        action=best,
        agent_utility=utilities[best],
        principal_utility=principal[best],
        utilities=tuple(utilities),
        principal_utilities=tuple(principal),
    )


def best_menu_choice(instance: Instance, type_index: int, menu: Menu) -> tuple[int, BestResponse]:
    """The canonical (contract, action) pair a type picks from a whole menu."""
    chosen = 0
    chosen_br = best_response(instance, type_index, menu.contracts[0])
    for idx in range(1, menu.num_types):
        br = best_response(instance, type_index, menu.contracts[idx])
        if br.agent_utility > chosen_br.agent_utility or (
            br.agent_utility == chosen_br.agent_utility
            and br.principal_utility > chosen_br.principal_utility
        ):
            chosen, chosen_br = idx, br
    return chosen, chosen_br


def _has_zero_cost_action(instance: Instance) -> bool:
    if isinstance(instance, SingleParamInstance):
        return any(c == 0 for c in instance.unit_costs)
    return all(costs[0] == 0 for costs in instance.costs)


def verify_ic(
    instance: Instance,
    menu: Menu,
    eta: Fraction | int = 0,
    check_ir: bool | None = None,
) -> ICCertificate:
    """Exact eta-incentive-compatibility certificate for a menu.

    Every (type, reported type, action) constraint is evaluated exactly.  A
    constant menu (all contracts bit-identical) degenerates to per-type
    obedience: misreport constraints are vacuous and are not counted.

    IR (non-negative utility at the recommendation) is implied by limited
    liability plus a zero-cost action; it is checked explicitly exactly when
    that guarantee is absent, or when the caller forces ``check_ir``.
    """
    eta = Fraction(eta)
    if menu.num_types != instance.num_types:
        raise ValueError("menu and instance disagree on the number of types")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if check_ir is None:
        check_ir = not (menu.limited_liability and _has_zero_cost_action(instance))

    constant = menu.is_constant
    violations: list[ICViolation] = []
    ir_violations: list[tuple[int, Fraction]] = []
    checked = 0
    misreports = 0
    for k in range(instance.num_types):
        promised = agent_utility(instance, k, menu.contracts[k], menu.actions[k])
        reports = (k,) if constant else range(menu.num_types)
        for rep in reports:
            contract = menu.contracts[rep]
            for action in range(instance.num_actions):
                checked += 1
                if rep != k:
                    misreports += 1
                alt = agent_utility(instance, k, contract, action)
                if promised < alt - eta:
                    violations.append(ICViolation(k, rep, action, alt - eta - promised))
        if check_ir and promised < 0:
            ir_violations.append((k, -promised))

    return ICCertificate(
        eta=eta,
        passed=not violations and not ir_violations,
        violations=tuple(violations),
        constraints_checked=checked,
        misreport_constraints_checked=misreports,
        ir_checked=check_ir,
        ir_violations=tuple(ir_violations),
        constant_menu=constant,
    )


def verify_randomized_ic(
    instance: SingleParamInstance,
    rmenu: RandomizedMenu,
    eta: Fraction | int = 0,
) -> ICCertificate:
    """Exact constraint check for a menu of randomized contracts.

    Truthful value of type k must be, up to eta, at least the value of
    reporting k': the lottery of k' where the agent then plays a best action
    against whichever contract it drew.
    """
    eta = Fraction(eta)
    if rmenu.num_types != instance.num_types:
        raise ValueError("randomized menu and instance disagree on the number of types")
    n = instance.num_actions
    truthful = []
    for k in range(instance.num_types):
        value = Fraction(0)
        for i in range(n):
            w = rmenu.weights[k][i]
            if w:
                value += w * agent_utility(instance, k, Contract(rmenu.payments[k][i]), i)
        truthful.append(value)

    violations = []
    checked = 0
    misreports = 0
    for k in range(instance.num_types):
        for rep in range(instance.num_types):
            checked += 1
            if rep != k:
                misreports += 1
            value = Fraction(0)
            for i in range(n):
                w = rmenu.weights[rep][i]
                if w:
                    contract = Contract(rmenu.payments[rep][i])
                    value += w * max(
                        agent_utility(instance, k, contract, a) for a in range(n)
                    )
            if truthful[k] < value - eta:
                violations.append(ICViolation(k, rep, None, value - eta - truthful[k]))

    return ICCertificate(
        eta=eta,
        passed=not violations,
        violations=tuple(violations),
        constraints_checked=checked,
        misreport_constraints_checked=misreports,
        ir_checked=False,
        ir_violations=(),
        constant_menu=False,
    )
