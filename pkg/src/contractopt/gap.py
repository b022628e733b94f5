"""Generator for the family separating menus from single contracts.

For odd n the instance has (n-1)/2 types and n actions arranged in per-type
pairs; a short menu extracts value from every type while any one contract is
provably poor, so the menu-to-single ratio grows linearly in n.  The
construction uses exponents up to 2^{2n^2 + n} and is only usable with exact
big rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from contractopt.core import Contract, Menu, SingleParamInstance
from contractopt.rational import pow2

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class GapInstanceSpec:
    """Derived constants of the separation family for a given odd n."""

    n: int
    half: int  # (n - 1) / 2: number of types, pairs of work actions
    l: int  # 2 n^2
    normalizer: Fraction  # sum over i of 2^{i n + i l}

    @property
    def menu_value(self) -> Fraction:
        """Expected principal utility of the certified menu: half/(2C)."""
        return Fraction(self.half, 1) / (2 * self.normalizer)

    @property
    def single_value_bound(self) -> Fraction:
        """Upper bound 3/C on the value of any one contract."""
        return Fraction(3, 1) / self.normalizer


def _spec(n: int) -> GapInstanceSpec:
    half = (n - 1) // 2
    l = 2 * n * n
    normalizer = sum((pow2(i * n + i * l) for i in range(1, half + 1)), ZERO)
    return GapInstanceSpec(n=n, half=half, l=l, normalizer=normalizer)


def _require_odd(n: int, pad_even: bool) -> int:
    """Return the odd size the construction runs at; reject bad input."""
    if not isinstance(n, int) or n < 3:
        raise ValueError(f"gap family needs an integer n >= 3, got {n!r}")
    if n % 2 == 0:
        if not pad_even:
            raise ValueError(
                f"gap family is defined for odd n (got {n}); "
                "pass pad_even=True to pad with an inert action"
            )
        return n - 1
    return n


def build_gap_instance(
    n: int, pad_even: bool = False
) -> tuple[SingleParamInstance, GapInstanceSpec]:
    """Instance with outcomes [skip, bonus, marker_1..marker_half].

    Action 0 is the opt-out; actions 2i-1 and 2i form type i's pair.  With
    pad_even=True an even n is served by the (n-1)-construction plus one
    duplicate opt-out row, so the action count still equals n.
    """
    odd = _require_odd(n, pad_even)
    spec = _spec(odd)
    half, l = spec.half, spec.l
    m = half + 2
    rewards = [ZERO, ONE] + [ZERO] * half

    transitions = [[ONE] + [ZERO] * (half + 1)]
    unit_costs = [ZERO]
    for i in range(1, half + 1):
        scale = pow2(-i * l)
        # first action of the pair: bonus and this type's marker only
        row = [ONE - 2 * scale, scale] + [ZERO] * half
        row[1 + i] = scale
        transitions.append(row)
        unit_costs.append(pow2(-2 * i * l) * (ONE - pow2(-i * odd)))
        # second action: bonus plus every marker, at full unit cost
        row = [ONE - (half + 1) * scale, scale] + [scale] * half
        transitions.append(row)
        unit_costs.append(pow2(-2 * i * l))
    if odd != n:  # inert padding row for even n
        transitions.append([ONE] + [ZERO] * (half + 1))
        unit_costs.append(ZERO)

    types = [pow2(i * l) for i in range(1, half + 1)]
    prior = [pow2(i * odd + i * l) / spec.normalizer for i in range(1, half + 1)]
    instance = SingleParamInstance(
        rewards=rewards,
        transitions=transitions,
        unit_costs=unit_costs,
        types=types,
        prior=prior,
    )
    return instance, spec


def build_gap_menu(n: int, pad_even: bool = False) -> Menu:
    """The certified menu: contract i pays 1 - 2^{-in-1} on marker i only.

    Type i is steered to the first action of its pair; the principal keeps
    2^{-il-in-1} per type, which the prior turns into half/(2C) overall.
    """
    odd = _require_odd(n, pad_even)
    spec = _spec(odd)
    half = spec.half
    m = half + 2
    contracts = []
    actions = []
    for i in range(1, half + 1):
        payments = [ZERO] * m
        payments[1 + i] = ONE - pow2(-i * odd - 1)
        contracts.append(Contract(payments))
        actions.append(2 * i - 1)
    return Menu(contracts, actions)
