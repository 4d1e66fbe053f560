from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def as_rational(value) -> Fraction:
    """Exact rational from ints, Fractions, decimal strings, ``"p/q"`` strings or floats.

    Floats go through their shortest repr so ``0.1`` becomes ``1/10`` rather
    than the nearest binary fraction.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {value!r} to a rational")
