"""Mid-rise uniform quantizers and fixed-length coding.

Two quantizers are provided:

* :class:`MidRiseInfinite` maps ``x`` to ``delta * (floor(x / delta) + 1/2)``.
* :class:`BoundedMidRise` has ``2 * half_levels`` levels centred on a movable
  basis, indexed ``j = -half_levels .. half_levels - 1``; inputs beyond the
  outermost cell boundaries saturate onto the outermost levels.

Floors are mathematical (toward minus infinity). All arithmetic is exact when
inputs are rationals; the quantizer parameters themselves are kept as
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ._rational import as_rational

__all__ = [
    "BadLength",
    "BoundedMidRise",
    "FlcCodec",
    "IndexOutOfRange",
    "MidRiseInfinite",
    "MissingWidth",
    "bits_for_infinite_message",
    "flc_decode",
    "flc_encode",
    "floor_level",
    "quantize_bounded",
    "quantize_infinite",
]

HALF = Fraction(1, 2)

# message widths for the infinite-range quantizer used by the target-localization runs
STANDARD_WIDTHS = {Fraction(1, 10): 7, Fraction(1, 100): 10, Fraction(1, 1000): 14}


class IndexOutOfRange(ValueError):
    pass


class BadLength(ValueError):
    pass


class MissingWidth(ValueError):
    pass


def _exact(x) -> Fraction:
    # floats are taken at their exact binary value
    return x if isinstance(x, Fraction) else Fraction(x)


def _floor_div(x, delta: Fraction) -> int:
    return math.floor(_exact(x) / delta)


@dataclass(frozen=True)
class MidRiseInfinite:
    delta: Fraction

    def __post_init__(self):
        d = as_rational(self.delta)
        if d <= 0:
            raise ValueError(f"quantization level must be positive, got {self.delta}")
        object.__setattr__(self, "delta", d)

    def level(self, x) -> int:
        return _floor_div(x, self.delta)

    def __call__(self, x) -> Fraction:
        return self.delta * (self.level(x) + HALF)


def floor_level(q: MidRiseInfinite, x) -> int:
    """``floor(x / delta)``; the quantized value over ``delta`` is this plus one half."""
    return q.level(x)


def quantize_infinite(q: MidRiseInfinite, x) -> Fraction:
    return q(x)


@dataclass(frozen=True)
class BoundedMidRise:
    """Mid-rise quantizer with ``2 * half_levels`` levels around ``basis``.

    Level ``j`` represents ``basis + (j + 1/2) * delta``. Cell ``j`` covers
    ``[basis + j*delta, basis + (j+1)*delta)`` except the two outermost cells,
    which extend to infinity.
    """

    basis: Fraction
    delta: Fraction
    half_levels: int

    def __post_init__(self):
        d = as_rational(self.delta)
        if d <= 0:
            raise ValueError(f"quantization level must be positive, got {self.delta}")
        if int(self.half_levels) < 1:
            raise ValueError(f"half_levels must be a positive integer, got {self.half_levels}")
        object.__setattr__(self, "delta", d)
        object.__setattr__(self, "basis", as_rational(self.basis))
        object.__setattr__(self, "half_levels", int(self.half_levels))

    @classmethod
    def for_bits(cls, basis, delta, n_bits: int) -> "BoundedMidRise":
        """Quantizer whose ``2**n_bits`` levels fill an ``n_bits``-wide FLC code."""
        if n_bits < 1:
            raise ValueError(f"n_bits must be >= 1, got {n_bits}")
        return cls(basis, delta, 2 ** (n_bits - 1))

    @property
    def bits_per_symbol(self) -> int:
        return max(1, math.ceil(math.log2(2 * self.half_levels)))

    @property
    def saturation_offset(self) -> int:
        """Number of cells between the basis and the start of each outermost (saturating) cell.

        For the 3-bit quantizer this is 3: inputs ``>= b_q + 3*delta`` or
        ``< b_q - 3*delta`` fall in the saturating cells.
        """
        return self.half_levels - 1

    def index(self, x) -> int:
        j = _floor_div(_exact(x) - self.basis, self.delta)
        return max(-self.half_levels, min(self.half_levels - 1, j))

    def value(self, j: int) -> Fraction:
        if not -self.half_levels <= j <= self.half_levels - 1:
            raise IndexOutOfRange(f"level {j} outside [{-self.half_levels}, {self.half_levels - 1}]")
        return self.basis + (j + HALF) * self.delta

    def levels(self) -> list[Fraction]:
        return [self.value(j) for j in range(-self.half_levels, self.half_levels)]

    def is_saturated(self, x) -> bool:
        """True iff ``x`` lies in one of the two outermost cells."""
        x = _exact(x)
        off = self.saturation_offset * self.delta
        return x >= self.basis + off or x < self.basis - off

    def __call__(self, x) -> tuple[Fraction, int]:
        j = self.index(x)
        return self.value(j), j


def quantize_bounded(q: BoundedMidRise, x) -> tuple[Fraction, int]:
    return q(x)


@dataclass(frozen=True)
class FlcCodec:
    """Fixed-length code: level ``j`` is sent as ``j + half_levels`` in big-endian binary."""

    half_levels: int

    @property
    def bits_per_symbol(self) -> int:
        return max(1, math.ceil(math.log2(2 * self.half_levels)))

    def encode(self, j: int) -> str:
        if not -self.half_levels <= j <= self.half_levels - 1:
            raise IndexOutOfRange(f"level {j} outside [{-self.half_levels}, {self.half_levels - 1}]")
        return format(j + self.half_levels, f"0{self.bits_per_symbol}b")

    def decode(self, bits: str) -> int:
        if len(bits) != self.bits_per_symbol or any(c not in "01" for c in bits):
            raise BadLength(f"expected {self.bits_per_symbol} binary digits, got {bits!r}")
        j = int(bits, 2) - self.half_levels
        if j > self.half_levels - 1:
            raise IndexOutOfRange(f"code {bits} maps to unused level {j}")
        return j


def flc_encode(c: FlcCodec, level_index: int) -> str:
    return c.encode(level_index)


def flc_decode(c: FlcCodec, bits: str) -> int:
    return c.decode(bits)


def bits_for_infinite_message(delta, configured_width: int | None = None, value_range=None) -> int:
    """Message width in bits for the infinite-range quantizer at level ``delta``.

    Priority: an explicit ``configured_width``; the standard 7/10/14-bit widths
    for delta = 0.1/0.01/0.001; otherwise ``ceil(log2(value_range / delta)) + 1``.
    With ``value_range = 5`` the formula reproduces the three standard widths.
    """
    if configured_width is not None:
        return int(configured_width)
    d = as_rational(delta)
    if d in STANDARD_WIDTHS:
        return STANDARD_WIDTHS[d]
    if value_range is None:
        raise MissingWidth(f"no standard width for delta={d}; configure a width or a value range")
    ratio = as_rational(value_range) / d
    if ratio <= 1:
        return 1
    # exact ceil(log2(ratio))
    bits = ratio.numerator.bit_length() - ratio.denominator.bit_length()
    while Fraction(2) ** bits < ratio:
        bits += 1
    while bits > 0 and Fraction(2) ** (bits - 1) >= ratio:
        bits -= 1
    return bits + 1
