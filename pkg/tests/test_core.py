"""Instance containers, validation, and exact utility accounting."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from contractopt.core import (
    Contract,
    Menu,
    MultiParamInstance,
    RandomizedMenu,
    SingleParamInstance,
    agent_utility,
    menu_utilities,
    principal_type_utility,
    principal_utility,
    randomized_agent_utility,
    randomized_principal_utility,
    validate,
)

from helpers import i0_multi, i0_single, rand_multi_instance

F = Fraction


def test_i0_single_basic_quantities():
    inst = i0_single()
    assert inst.num_outcomes == 2
    assert inst.num_actions == 2
    assert inst.num_types == 1
    assert inst.action_cost(0, 1) == F(1, 2)
    assert inst.action_cost(0, 0) == 0
    assert inst.expected_reward(0, 1) == 1
    assert inst.expected_reward(0, 0) == 0
    assert validate(inst) == ()


def test_i0_multi_utilities():
    inst = i0_multi()
    p = Contract((F(0), F(1, 2)))
    # work action: agent nets 1/2 - 1/2 = 0, principal nets 1 - 1/2 = 1/2
    assert agent_utility(inst, 0, p, 1) == 0
    assert principal_type_utility(inst, 0, p, 1) == F(1, 2)
    assert agent_utility(inst, 0, p, 0) == 0
    assert principal_type_utility(inst, 0, p, 0) == 0


def test_menu_utilities_single_type():
    inst = i0_multi()
    menu = Menu((Contract((F(0), F(1, 2))),), (1,))
    agent, principal = menu_utilities(inst, menu)
    assert agent == (F(0),)
    assert principal == (F(1, 2),)
    assert principal_utility(inst, menu) == F(1, 2)


def test_contract_liability_flag():
    assert Contract((F(0), F(1))).limited_liability
    assert not Contract((F(-1, 3), F(1))).limited_liability
    menu = Menu((Contract((F(0),)), Contract((F(-1),))), (0, 0))
    assert not menu.limited_liability
    assert not menu.is_constant
    assert Menu((Contract((F(1),)), Contract((F(1),))), (0, 0)).is_constant


def test_randomized_menu_utilities():
    inst = i0_single()
    # lottery entry i recommends action i with its own payment vector
    lottery = RandomizedMenu(
        weights=((F(1, 4), F(3, 4)),),
        payments=(((F(0), F(0)), (F(0), F(3, 4))),),
    )
    # action 0 leg: everyone nets 0; action 1 leg: agent 3/4 - 1/2, principal 1 - 3/4
    assert randomized_agent_utility(inst, 0, lottery) == F(3, 16)
    assert randomized_principal_utility(inst, lottery) == F(3, 16)


def test_validate_prior_and_rewards():
    inst = MultiParamInstance(
        rewards=(F(0), F(3, 2)),
        type_labels=("t",),
        transitions=(((F(1), F(0)), (F(0), F(1))),),
        costs=((F(0), F(1, 2)),),
        prior=(F(1, 2),),
    )
    msgs = validate(inst)
    assert any("prior does not sum to 1 (sum 1/2)" in m for m in msgs)
    assert any("reward outside [0, 1]" in m for m in msgs)


def test_validate_reports_nonstochastic_row():
    inst = MultiParamInstance(
        rewards=(F(0), F(1)),
        type_labels=("t",),
        transitions=(((F(1), F(0)), (F(1, 8), F(1))),),
        costs=((F(0), F(1, 2)),),
        prior=(F(1),),
    )
    msgs = validate(inst)
    assert any("transition row not stochastic (sum 9/8)" in m for m in msgs)


def test_validate_opt_out_cost():
    inst = MultiParamInstance(
        rewards=(F(0), F(1)),
        type_labels=("t",),
        transitions=(((F(1), F(0)), (F(0), F(1))),),
        costs=((F(1, 4), F(1, 2)),),
        prior=(F(1),),
    )
    assert any("opt-out cost nonzero" in m for m in validate(inst))


def test_validate_single_requires_zero_cost_action_somewhere():
    inst = SingleParamInstance(
        rewards=(F(0), F(1)),
        transitions=((F(1), F(0)), (F(0), F(1))),
        unit_costs=(F(1, 4), F(1, 2)),
        types=(F(1),),
        prior=(F(1),),
    )
    assert any("no zero-cost" in m for m in validate(inst))
    # zero-cost action in a non-leading slot is acceptable
    inst2 = SingleParamInstance(
        rewards=(F(0), F(1)),
        transitions=((F(0), F(1)), (F(1), F(0))),
        unit_costs=(F(1, 2), F(0)),
        types=(F(1),),
        prior=(F(1),),
    )
    assert validate(inst2) == ()


def test_validate_single_type_ordering():
    inst = SingleParamInstance(
        rewards=(F(0), F(1)),
        transitions=((F(1), F(0)), (F(0), F(1))),
        unit_costs=(F(0), F(1, 2)),
        types=(F(2), F(1)),
        prior=(F(1, 2), F(1, 2)),
    )
    assert any("strictly increasing" in m for m in validate(inst))


def test_floats_rejected():
    with pytest.raises(TypeError):
        Contract((0.5,))
    with pytest.raises(TypeError):
        SingleParamInstance(
            rewards=(0.0, 1.0),
            transitions=((F(1), F(0)),),
            unit_costs=(F(0),),
            types=(F(1),),
            prior=(F(1),),
        )


def test_instances_frozen():
    inst = i0_multi()
    with pytest.raises(AttributeError):
        inst.rewards = (F(0),)
    with pytest.raises(AttributeError):
        Contract((F(0),)).payments = (F(1),)


small = st.integers(min_value=0, max_value=8)


@given(num=small, den=st.integers(min_value=1, max_value=8), seed=st.integers(0, 10**6))
def test_agent_utility_affine_in_payment_scale(num, den, seed):
    # u(k, lam*p, i) = lam * <F_i, p> - c  is affine in lam with slope <F_i, p>
    inst = rand_multi_instance(random.Random(seed), 2, 2, 1)
    lam = F(num, den)
    p = Contract((F(1, 3), F(2, 5)))
    scaled = Contract(tuple(lam * x for x in p.payments))
    base = agent_utility(inst, 0, p, 1)
    cost = inst.action_cost(0, 1)
    assert agent_utility(inst, 0, scaled, 1) == lam * (base + cost) - cost
