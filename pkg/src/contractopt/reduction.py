"""Embedding a multi-parameter instance into a single-parameter one.

Each (type, action) pair of the source becomes one action of the image
whose transition row is the source row scaled by a power of two, with the
leftover probability absorbed by a fresh dummy outcome.  A zero-reward,
zero-cost dummy action anchors opt-out, and one auxiliary top type keeps
the image's type ladder strictly increasing.  All scale factors are exact
powers of two, so round trips stay bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from contractopt.core import MultiParamInstance, SingleParamInstance, validate
from contractopt.rational import pow2
from contractopt.solvers import require_valid
from contractopt.unrestricted import VirtualCostTable, virtual_costs

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class ReductionParams:
    """Exact scale parameters shared by the embedding and both lifts."""

    epsilon: Fraction
    l: int  # bit stride between consecutive image types
    alpha: Fraction  # total prior mass granted to the non-auxiliary types
    H: Fraction  # prior rescaling constant
    mu_min: Fraction


@dataclass(frozen=True)
class ReductionMap:
    """The embedding itself plus everything needed to invert it."""

    source: MultiParamInstance
    reduced: SingleParamInstance
    params: ReductionParams
    dummy_action: int
    dummy_outcome: int
    aux_type_index: int

    def action_row(self, type_index: int, action: int) -> int:
        """Image action implementing source action `action` for this type."""
        return type_index * self.source.num_actions + action

    def action_pair(self, row: int) -> tuple[int, int]:
        """Inverse of action_row; the dummy action maps to no pair."""
        if row == self.dummy_action:
            raise ValueError("the dummy action corresponds to no source action")
        n = self.source.num_actions
        return divmod(row, n)


def choose_parameters(instance: MultiParamInstance, epsilon: Fraction) -> ReductionParams:
    """Pick the bit stride l and the prior scale for a target precision.

    l is one more than the smallest l0 >= 0 with 2^{l0} mu_min epsilon > 4,
    floored at 1.  alpha = 1 / (2^{(K+1) l} + 1) and H normalizes the
    reweighted prior to total mass alpha.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    mu_min = min(instance.prior)
    l0 = 0
    while pow2(l0) * mu_min * epsilon <= 4:
        l0 += 1
    l = max(1, l0 + 1)
    K = instance.num_types
    alpha = ONE / (pow2((K + 1) * l) + 1)
    weighted = sum(
        (mu * pow2((k + 1) * l) for k, mu in enumerate(instance.prior)), ZERO
    )
    return ReductionParams(
        epsilon=epsilon, l=l, alpha=alpha, H=alpha / weighted, mu_min=mu_min
    )


def reduce_instance(instance: MultiParamInstance, epsilon: Fraction) -> ReductionMap:
    """Build the single-parameter image at precision epsilon.

    Image dimensions: (n K + 1) actions, (m + 1) outcomes, (K + 1) types.
    The auxiliary type value 2^{2 K l + 1} / epsilon must exceed the top
    regular type value 2^{K l}; for absurdly coarse epsilon it would not,
    and that is reported as a ValueError rather than silently producing a
    non-sorted ladder.
    """
    require_valid(instance)
    params = choose_parameters(instance, epsilon)
    l = params.l
    n = instance.num_actions
    m = instance.num_outcomes
    K = instance.num_types

    rewards = tuple(instance.rewards) + (ZERO,)

    transitions = []
    unit_costs = []
    for k in range(K):
        scale = pow2(-(k + 1) * l)
        cost_scale = pow2(-2 * (k + 1) * l)
        for i in range(n):
            row = instance.transition_row(k, i)
            transitions.append(tuple(scale * f for f in row) + (ONE - scale,))
            unit_costs.append(cost_scale * (instance.costs[k][i] + epsilon))
    # zero-cost dummy action: all mass on the dummy outcome
    transitions.append((ZERO,) * m + (ONE,))
    unit_costs.append(ZERO)

    types = [pow2((k + 1) * l) for k in range(K)]
    aux_type = pow2(2 * K * l + 1) / epsilon
    if aux_type <= types[-1]:
        raise ValueError(
            f"epsilon {epsilon} is too coarse: auxiliary type {aux_type} does not "
            f"exceed the top type {types[-1]}"
        )
    types.append(aux_type)

    prior = [mu * pow2((k + 1) * l) * params.H for k, mu in enumerate(instance.prior)]
    prior.append(ONE - sum(prior, ZERO))

    reduced = SingleParamInstance(
        rewards=rewards,
        transitions=tuple(transitions),
        unit_costs=tuple(unit_costs),
        types=tuple(types),
        prior=tuple(prior),
    )
    issues = validate(reduced)
    if issues:
        raise ValueError("reduction produced an invalid image: " + "; ".join(issues))
    return ReductionMap(
        source=instance,
        reduced=reduced,
        params=params,
        dummy_action=n * K,
        dummy_outcome=m,
        aux_type_index=K,
    )


def check_regularity(instance: SingleParamInstance) -> tuple[bool, VirtualCostTable]:
    """Whether the discrete virtual costs are already non-decreasing."""
    table = virtual_costs(instance)
    return table.regular, table


def suggest_epsilon(
    instance: MultiParamInstance, xi: Fraction, tau: int | None = None
) -> Fraction:
    """A perfect-square precision heuristic, (2^-tau xi / 10)^2.

    tau defaults to the total bit length of every numerator and denominator
    in the instance, a deliberately conservative stand-in for its encoding
    size; pass an explicit tau to trade accuracy against image size.
    """
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}")
    if tau is None:
        tau = 0
        values = list(instance.rewards)
        for matrix in instance.transitions:
            for row in matrix:
                values.extend(row)
        for row in instance.costs:
            values.extend(row)
        values.extend(instance.prior)
        for v in values:
            tau += v.numerator.bit_length() + v.denominator.bit_length()
    elif tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    root = pow2(-tau) * xi / 10
    return root * root
