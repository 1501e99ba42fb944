"""Exact rational arithmetic helpers.

All energy, price and cost values in this package are `fractions.Fraction`
so that sums, shares and comparisons are exact and hashable.  Transcendental
functions (log, exp, non-integer powers) have no exact rational value; they
are evaluated deterministically in 40-digit decimal arithmetic and converted
back to a Fraction, so repeated runs agree bit for bit.
"""

from __future__ import annotations

import decimal
import math
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Union

ExactLike = Union[Fraction, int, str]

_CTX = decimal.Context(prec=40)


def parse_exact(value: ExactLike, *, where: str = "value") -> Fraction:
    """Parse an exact number from an int, Fraction, or decimal/rational string.

    Floats are rejected: binary floats do not carry exact decimal intent.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"{where}: expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ValueError(
            f"{where}: floats are not exact; write the number as a string"
        )
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{where}: cannot parse {value!r} as an exact number") from exc
    raise ValueError(f"{where}: cannot parse {type(value).__name__} as an exact number")


def is_terminating(value: Fraction) -> bool:
    """True when the fraction has a finite decimal expansion."""
    d = value.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def format_exact(value: Fraction) -> str:
    """Canonical string: shortest exact decimal if one exists, else "p/q"."""
    if value.denominator == 1:
        return str(value.numerator)
    if not is_terminating(value):
        return f"{value.numerator}/{value.denominator}"
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    places = max(twos, fives)
    scaled = value.numerator * 10**places // value.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def round_half_up(value: Fraction, places: int = 2) -> Fraction:
    """Round to `places` decimals, halves away from zero."""
    scale = 10**places
    scaled = value * scale
    if scaled >= 0:
        n = (scaled + Fraction(1, 2)).__floor__()
    else:
        n = -((-scaled + Fraction(1, 2)).__floor__())
    return Fraction(n, scale)


def display(value: Fraction, places: int = 2) -> str:
    """Fixed-point string with half-up rounding, e.g. display(F('1.675')) == '1.68'."""
    rounded = round_half_up(value, places)
    n = rounded.numerator * (10**places // rounded.denominator)
    sign = "-" if n < 0 else ""
    digits = str(abs(n)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}" if places else f"{sign}{digits}"


def _to_decimal(value: Fraction) -> Decimal:
    return _CTX.divide(Decimal(value.numerator), Decimal(value.denominator))


def exact_ln(value: Fraction) -> Fraction:
    """Natural log, 40 significant digits, deterministic."""
    if value <= 0:
        raise ValueError(f"log undefined for {value}")
    return Fraction(_to_decimal(value).ln(context=_CTX))


def exact_exp(value: Fraction) -> Fraction:
    """exp, 40 significant digits, deterministic."""
    return Fraction(_to_decimal(value).exp(context=_CTX))


def exact_pow(base: Fraction, exponent: Fraction) -> Fraction:
    """base ** exponent; exact when the exponent is an integer."""
    if base < 0:
        raise ValueError(f"power undefined for negative base {base}")
    if exponent.denominator == 1:
        return base ** int(exponent)
    if base == 0:
        return Fraction(0)
    return exact_exp(exponent * exact_ln(base))


def common_denominator(values: Iterable[Fraction]) -> int:
    """lcm of denominators; scaling by it turns every value into an integer."""
    out = 1
    for v in values:
        out = math.lcm(out, v.denominator)
    return out
