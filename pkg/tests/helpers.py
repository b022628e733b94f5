"""Shared fixtures: tiny reference instances and seeded random generators.

The random generators produce exact rationals only; denominators are kept
small so oracle LPs stay fast.
"""

from __future__ import annotations

import random
from fractions import Fraction

from contractopt.core import MultiParamInstance, SingleParamInstance

F = Fraction


def i0_single() -> SingleParamInstance:
    """Two actions, two outcomes, one type; optimal value 1/2 at p=(0, 1/2)."""
    return SingleParamInstance(
        rewards=[0, 1],
        transitions=[[1, 0], [0, 1]],
        unit_costs=[0, 1],
        types=[F(1, 2)],
        prior=[1],
    )


def i0_multi() -> MultiParamInstance:
    """The same screening problem written with explicit per-type costs."""
    return MultiParamInstance(
        rewards=[0, 1],
        type_labels=["only"],
        transitions=[[[1, 0], [0, 1]]],
        costs=[[0, F(1, 2)]],
        prior=[1],
    )


def rand_fraction(rng: random.Random, max_den: int = 16) -> Fraction:
    den = rng.randint(1, max_den)
    return F(rng.randint(0, den), den)


def stochastic_row(rng: random.Random, m: int, den: int = 12) -> tuple[Fraction, ...]:
    cuts = sorted(rng.randint(0, den) for _ in range(m - 1))
    masses = []
    prev = 0
    for c in cuts:
        masses.append(c - prev)
        prev = c
    masses.append(den - prev)
    return tuple(F(x, den) for x in masses)


def positive_prior(rng: random.Random, k: int, den: int = 12) -> tuple[Fraction, ...]:
    weights = [rng.randint(1, den) for _ in range(k)]
    total = sum(weights)
    return tuple(F(w, total) for w in weights)


def rand_single_instance(
    rng: random.Random, n: int, m: int, k: int, den: int = 12
) -> SingleParamInstance:
    rewards = [rand_fraction(rng, den) for _ in range(m)]
    transitions = [stochastic_row(rng, m, den) for _ in range(n)]
    costs = [F(0)] + [rand_fraction(rng, den) for _ in range(n - 1)]
    types = []
    value = F(0)
    for _ in range(k):
        value += F(rng.randint(1, den), den)
        types.append(value)
    return SingleParamInstance(
        rewards=rewards,
        transitions=transitions,
        unit_costs=costs,
        types=types,
        prior=positive_prior(rng, k, den),
    )


def rand_multi_instance(
    rng: random.Random, n: int, m: int, k: int, den: int = 12
) -> MultiParamInstance:
    rewards = [rand_fraction(rng, den) for _ in range(m)]
    transitions = [[stochastic_row(rng, m, den) for _ in range(n)] for _ in range(k)]
    costs = [[F(0)] + [rand_fraction(rng, den) for _ in range(n - 1)] for _ in range(k)]
    return MultiParamInstance(
        rewards=rewards,
        type_labels=[f"t{j}" for j in range(k)],
        transitions=transitions,
        costs=costs,
        prior=positive_prior(rng, k, den),
    )
