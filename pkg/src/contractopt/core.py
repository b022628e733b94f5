"""Instance and solution data model.

Two instance flavors share one access protocol:

- MultiParamInstance: each type carries its own outcome-distribution matrix
  and cost vector.
- SingleParamInstance: one matrix and one unit-cost vector; the cost of type
  theta playing action i is theta * c_i exactly.

Everything is an immutable dataclass holding exact rationals.  Floating point
input is rejected outright; semantic problems (non-stochastic rows, missing
opt-out, prior mass errors) are reported by :func:`validate` as data rather
than raised, so callers can surface all violations at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from contractopt.rational import format_rational

ZERO = Fraction(0)
ONE = Fraction(1)


def _coerce(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError(f"floating-point value rejected: {value!r}")
    return Fraction(value)


def _vector(values: Sequence) -> tuple[Fraction, ...]:
    return tuple(_coerce(v) for v in values)


def _matrix(rows: Sequence[Sequence]) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(_vector(row) for row in rows)


@dataclass(frozen=True)
class MultiParamInstance:
    """Hidden-action model where the agent's type fixes both the outcome
    matrix and the cost vector; action 0 is the zero-cost opt-out."""

    rewards: tuple[Fraction, ...]
    type_labels: tuple[str, ...]
    transitions: tuple[tuple[tuple[Fraction, ...], ...], ...]  # per type: n x m
    costs: tuple[tuple[Fraction, ...], ...]  # per type: length n
    prior: tuple[Fraction, ...]

    def __init__(self, rewards, type_labels, transitions, costs, prior):
        object.__setattr__(self, "rewards", _vector(rewards))
        object.__setattr__(self, "type_labels", tuple(str(t) for t in type_labels))
        object.__setattr__(self, "transitions", tuple(_matrix(mat) for mat in transitions))
        object.__setattr__(self, "costs", _matrix(costs))
        object.__setattr__(self, "prior", _vector(prior))
        k = len(self.type_labels)
        if not (len(self.transitions) == len(self.costs) == len(self.prior) == k):
            raise ValueError("type-indexed fields disagree on the number of types")
        if k == 0:
            raise ValueError("instance needs at least one type")
        n = len(self.costs[0])
        m = len(self.rewards)
        for mat, cost in zip(self.transitions, self.costs):
            if len(mat) != n or len(cost) != n:
                raise ValueError("action count differs across types")
            for row in mat:
                if len(row) != m:
                    raise ValueError("transition row width differs from reward length")
        if n == 0 or m == 0:
            raise ValueError("instance needs at least one action and one outcome")

    @property
    def num_outcomes(self) -> int:
        return len(self.rewards)

    @property
    def num_actions(self) -> int:
        return len(self.costs[0])

    @property
    def num_types(self) -> int:
        return len(self.prior)

    def transition_row(self, type_index: int, action: int) -> tuple[Fraction, ...]:
        return self.transitions[type_index][action]

    def action_cost(self, type_index: int, action: int) -> Fraction:
        return self.costs[type_index][action]

    def expected_reward(self, type_index: int, action: int) -> Fraction:
        row = self.transitions[type_index][action]
        return sum((f * r for f, r in zip(row, self.rewards)), ZERO)


@dataclass(frozen=True)
class SingleParamInstance:
    """Hidden-action model where types scale a common unit-cost vector."""

    rewards: tuple[Fraction, ...]
    transitions: tuple[tuple[Fraction, ...], ...]  # n x m
    unit_costs: tuple[Fraction, ...]  # length n
    types: tuple[Fraction, ...]  # strictly increasing
    prior: tuple[Fraction, ...]

    def __init__(self, rewards, transitions, unit_costs, types, prior):
        object.__setattr__(self, "rewards", _vector(rewards))
        object.__setattr__(self, "transitions", _matrix(transitions))
        object.__setattr__(self, "unit_costs", _vector(unit_costs))
        object.__setattr__(self, "types", _vector(types))
        object.__setattr__(self, "prior", _vector(prior))
        if len(self.types) != len(self.prior):
            raise ValueError("types and prior lengths disagree")
        if len(self.types) == 0:
            raise ValueError("instance needs at least one type")
        if len(self.transitions) != len(self.unit_costs):
            raise ValueError("transition rows and unit costs disagree on action count")
        if len(self.transitions) == 0 or len(self.rewards) == 0:
            raise ValueError("instance needs at least one action and one outcome")
        for row in self.transitions:
            if len(row) != len(self.rewards):
                raise ValueError("transition row width differs from reward length")

    @property
    def num_outcomes(self) -> int:
        return len(self.rewards)

    @property
    def num_actions(self) -> int:
        return len(self.unit_costs)

    @property
    def num_types(self) -> int:
        return len(self.prior)

    def transition_row(self, type_index: int, action: int) -> tuple[Fraction, ...]:
        return self.transitions[action]

    def action_cost(self, type_index: int, action: int) -> Fraction:
        return self.types[type_index] * self.unit_costs[action]

    def expected_reward(self, type_index: int, action: int) -> Fraction:
        row = self.transitions[action]
        return sum((f * r for f, r in zip(row, self.rewards)), ZERO)


Instance = Union[MultiParamInstance, SingleParamInstance]


@dataclass(frozen=True)
class Contract:
    """A payment per outcome.  Liability is a property of the payments."""

    payments: tuple[Fraction, ...]

    def __init__(self, payments):
        object.__setattr__(self, "payments", _vector(payments))

    @property
    def limited_liability(self) -> bool:
        return all(p >= 0 for p in self.payments)

    def expected_payment(self, row: Sequence[Fraction]) -> Fraction:
        if len(row) != len(self.payments):
            raise ValueError("outcome dimension mismatch")
        return sum((f * p for f, p in zip(row, self.payments)), ZERO)


@dataclass(frozen=True)
class Menu:
    """One contract and one recommended action per type."""

    contracts: tuple[Contract, ...]
    actions: tuple[int, ...]

    def __init__(self, contracts, actions):
        object.__setattr__(
            self,
            "contracts",
            tuple(c if isinstance(c, Contract) else Contract(c) for c in contracts),
        )
        object.__setattr__(self, "actions", tuple(int(a) for a in actions))
        if len(self.contracts) != len(self.actions):
            raise ValueError("contracts and actions disagree on the number of types")

    @property
    def num_types(self) -> int:
        return len(self.contracts)

    @property
    def is_constant(self) -> bool:
        first = self.contracts[0].payments
        return all(c.payments == first for c in self.contracts)

    @property
    def limited_liability(self) -> bool:
        return all(c.limited_liability for c in self.contracts)


@dataclass(frozen=True)
class RandomizedMenu:
    """Per type: a lottery over actions and one contract per action."""

    weights: tuple[tuple[Fraction, ...], ...]  # K x n
    payments: tuple[tuple[tuple[Fraction, ...], ...], ...]  # K x n x m

    def __init__(self, weights, payments):
        object.__setattr__(self, "weights", _matrix(weights))
        object.__setattr__(self, "payments", tuple(_matrix(mat) for mat in payments))
        if len(self.weights) != len(self.payments):
            raise ValueError("weights and payments disagree on the number of types")
        for w, mats in zip(self.weights, self.payments):
            if len(w) != len(mats):
                raise ValueError("weights and payments disagree on the number of actions")

    @property
    def num_types(self) -> int:
        return len(self.weights)


Solution = Union[Menu, Contract, RandomizedMenu]


@dataclass(frozen=True)
class SolveReport:
    """A solved program: objective, solution and supporting evidence.

    The constructor does not recompute anything; use
    :func:`contractopt.solvers.build_report` which checks that the stated
    objective equals the recomputed expected principal utility exactly.
    """

    objective: Fraction
    solution: Solution
    agent_utilities: tuple[Fraction, ...]
    principal_utilities: tuple[Fraction, ...]  # per type, prior-unweighted
    certificate: object | None = None
    profile: tuple[int, ...] | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# validation


def _check_rows(violations, type_index, matrix):
    for action, row in enumerate(matrix):
        total = sum(row)
        if total != 1 or any(f < 0 for f in row):
            where = f"type {type_index} action {action}: " if type_index is not None else f"action {action}: "
            violations.append(where + f"transition row not stochastic (sum {format_rational(total)})")


def validate(instance: Instance) -> tuple[str, ...]:
    """Return all semantic violations; an empty tuple means well-formed."""
    violations: list[str] = []
    total = sum(instance.prior)
    if total != 1:
        violations.append(f"prior does not sum to 1 (sum {format_rational(total)})")
    for k, mu in enumerate(instance.prior):
        if mu <= 0:
            violations.append(f"type {k}: prior entry not positive ({format_rational(mu)})")
    for w, r in enumerate(instance.rewards):
        if r < 0 or r > 1:
            violations.append(f"outcome {w}: reward outside [0, 1] ({format_rational(r)})")

    if isinstance(instance, MultiParamInstance):
        for k, matrix in enumerate(instance.transitions):
            _check_rows(violations, k, matrix)
        for k, costs in enumerate(instance.costs):
            if costs[0] != 0:
                violations.append(f"type {k}: opt-out cost nonzero ({format_rational(costs[0])})")
            for i, c in enumerate(costs):
                if c < 0 or c > 1:
                    violations.append(
                        f"type {k} action {i}: cost outside [0, 1] ({format_rational(c)})"
                    )
    else:
        _check_rows(violations, None, instance.transitions)
        for i, c in enumerate(instance.unit_costs):
            if c < 0:
                violations.append(f"action {i}: negative unit cost ({format_rational(c)})")
        if all(c != 0 for c in instance.unit_costs):
            violations.append("no zero-cost opt-out action")
        for k, theta in enumerate(instance.types):
            if theta < 0:
                violations.append(f"type {k}: negative type value ({format_rational(theta)})")
            if k > 0 and theta <= instance.types[k - 1]:
                violations.append(f"type {k}: type values not strictly increasing")
    return tuple(violations)


# ---------------------------------------------------------------------------
# utilities


def agent_utility(instance: Instance, type_index: int, contract: Contract, action: int) -> Fraction:
    """Expected payment minus cost for one type playing one action."""
    if not 0 <= action < instance.num_actions:
        raise ValueError(f"action {action} out of range")
    row = instance.transition_row(type_index, action)
    return contract.expected_payment(row) - instance.action_cost(type_index, action)


def principal_type_utility(instance: Instance, type_index: int, contract: Contract, action: int) -> Fraction:
    row = instance.transition_row(type_index, action)
    gain = sum((f * r for f, r in zip(row, instance.rewards)), ZERO)
    return gain - contract.expected_payment(row)


def principal_utility(instance: Instance, menu: Menu) -> Fraction:
    """Prior-weighted principal utility of a menu at its recommended actions."""
    if menu.num_types != instance.num_types:
        raise ValueError("menu and instance disagree on the number of types")
    total = ZERO
    for k, (contract, action) in enumerate(zip(menu.contracts, menu.actions)):
        total += instance.prior[k] * principal_type_utility(instance, k, contract, action)
    return total


def menu_utilities(instance: Instance, menu: Menu) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """(agent utilities, principal utilities) per type at the recommendations."""
    agents = []
    principals = []
    for k, (contract, action) in enumerate(zip(menu.contracts, menu.actions)):
        agents.append(agent_utility(instance, k, contract, action))
        principals.append(principal_type_utility(instance, k, contract, action))
    return tuple(agents), tuple(principals)


def randomized_principal_utility(instance: SingleParamInstance, rmenu: RandomizedMenu) -> Fraction:
    if rmenu.num_types != instance.num_types:
        raise ValueError("randomized menu and instance disagree on the number of types")
    total = ZERO
    for k in range(instance.num_types):
        for i in range(instance.num_actions):
            w = rmenu.weights[k][i]
            if w == 0:
                continue
            contract = Contract(rmenu.payments[k][i])
            total += instance.prior[k] * w * principal_type_utility(instance, k, contract, i)
    return total


def randomized_agent_utility(instance: SingleParamInstance, type_index: int, rmenu: RandomizedMenu) -> Fraction:
    """Expected utility of a type obeying its own lottery and recommendations."""
    total = ZERO
    for i in range(instance.num_actions):
        w = rmenu.weights[type_index][i]
        if w == 0:
            continue
        contract = Contract(rmenu.payments[type_index][i])
        total += w * agent_utility(instance, type_index, contract, i)
    return total
