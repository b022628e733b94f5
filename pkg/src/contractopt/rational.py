"""Exact rational scalar helpers.

All quantities in this package are :class:`fractions.Fraction` values.  The
stdlib type already guarantees the invariants we rely on (denominator > 0,
gcd(num, den) = 1 after every operation), so there is no wrapper class; this
module only adds parsing, formatting and square-root utilities that the
stdlib does not provide.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Union

Rational = Fraction
RationalLike = Union[Fraction, int]

_RATIONAL_RE = re.compile(r"^-?\d+(/[1-9]\d*)?$")

# Round-up grid used between Newton steps so numerators do not double in
# size on every iteration.  2^-192 of slack is far below any tolerance that
# appears in the bound checks.
_SQRT_PRECISION_BITS = 192
_SQRT_NEWTON_STEPS = 64


def rat(value: RationalLike, den: int | None = None) -> Fraction:
    """Coerce to Fraction.  ``rat(3, 4)`` and ``rat(Fraction(3, 4))`` agree."""
    if den is not None:
        return Fraction(value, den)
    return Fraction(value)


def parse_rational(text: str) -> Fraction:
    """Parse a ``"num/den"`` or ``"num"`` string, rejecting anything else.

    Floating-point literals, whitespace and zero denominators are all
    rejected; this keeps serialized documents unambiguous.
    """
    if not isinstance(text, str):
        raise ValueError(f"expected a rational string, got {type(text).__name__}: {text!r}")
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"not an exact rational literal: {text!r}")
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_rational(value: RationalLike) -> str:
    """Canonical ``"num/den"`` (or ``"num"`` for integers) rendering."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def decimal_str(value: RationalLike, digits: int = 12) -> str:
    """Deterministic decimal approximation, for display next to the exact value."""
    f = Fraction(value)
    if f == 0:
        return "0"
    sign = "-" if f < 0 else ""
    f = abs(f)
    exponent = 0
    while f >= 10:
        f /= 10
        exponent += 1
    while f < 1:
        f *= 10
        exponent -= 1
    scaled = f * Fraction(10) ** (digits - 1)
    mantissa = scaled.numerator // scaled.denominator  # truncate, deterministic
    text = str(mantissa)
    if exponent >= 0 and exponent < digits:
        int_part = text[: exponent + 1]
        frac_part = text[exponent + 1 :].rstrip("0")
        return sign + int_part + ("." + frac_part if frac_part else "")
    if -4 <= exponent < 0:
        return sign + "0." + "0" * (-exponent - 1) + text.rstrip("0")
    return sign + text[0] + "." + (text[1:].rstrip("0") or "0") + f"e{exponent}"


def exact_sqrt(value: RationalLike) -> Fraction | None:
    """Exact square root when ``value`` is a perfect rational square, else None."""
    f = Fraction(value)
    if f < 0:
        return None
    num_root = math.isqrt(f.numerator)
    den_root = math.isqrt(f.denominator)
    if num_root * num_root == f.numerator and den_root * den_root == f.denominator:
        return Fraction(num_root, den_root)
    return None


def is_perfect_square(value: RationalLike) -> bool:
    return exact_sqrt(value) is not None


def _round_up(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(-((-value.numerator * scale) // value.denominator), scale)


def sqrt_upper_bound(value: RationalLike) -> Fraction:
    """A rational s with s >= sqrt(value), exact for perfect squares.

    Newton's iteration from above converges quadratically and never crosses
    the root; each step is rounded up to a fixed grid so the representation
    stays small over the fixed 64 iterations.
    """
    f = Fraction(value)
    if f < 0:
        raise ValueError("square root of a negative rational")
    exact = exact_sqrt(f)
    if exact is not None:
        return exact
    s = f if f >= 1 else Fraction(1)
    for _ in range(_SQRT_NEWTON_STEPS):
        nxt = (s + f / s) / 2
        nxt = _round_up(nxt, _SQRT_PRECISION_BITS)
        if nxt >= s:
            break
        s = nxt
    assert s * s >= f
    return s


def pow2(exponent: int) -> Fraction:
    """2**exponent as an exact Fraction, valid for negative exponents."""
    if exponent >= 0:
        return Fraction(1 << exponent)
    return Fraction(1, 1 << (-exponent))
