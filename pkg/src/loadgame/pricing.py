"""Price functions of aggregate hourly load.

Unit conventions, fixed across the package: loads are kWh, unit prices are
euro-cents per kWh, and costs are euro.  The cent-to-euro factor 1/100 is
applied exactly once, in cost computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NegativeLoadError
from .exactmath import exact_ln, exact_pow

CENTS_PER_EURO = Fraction(100)


@dataclass(frozen=True)
class PowerLaw:
    """f(y) = scale * y ** exponent, convex for exponent >= 1."""

    scale: Fraction
    exponent: Fraction

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.exponent < 1:
            raise ValueError(f"exponent must be >= 1, got {self.exponent}")

    def __call__(self, load: Fraction) -> Fraction:
        return self.scale * exact_pow(load, self.exponent)


@dataclass(frozen=True)
class LoadLog:
    """f(y) = scale * y * ln(y + 1); natural log, also convex and f(0) = 0."""

    scale: Fraction

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    def __call__(self, load: Fraction) -> Fraction:
        if load == 0:
            return Fraction(0)
        return self.scale * load * exact_ln(load + 1)


@dataclass(frozen=True)
class FlatTariff:
    """Constant unit price, independent of load.

    Not part of the scenario-file schema (dynamic pricing is the point of the
    game); used for baselines and for exercising tie-breaking, where every
    allocation of the same energy costs the same.
    """

    price: Fraction

    def __post_init__(self):
        if self.price < 0:
            raise ValueError(f"price must be >= 0, got {self.price}")

    def __call__(self, load: Fraction) -> Fraction:
        return self.price


PriceModel = PowerLaw | LoadLog | FlatTariff


@dataclass(frozen=True)
class PriceVector:
    """Per-slot unit prices in cents per kWh."""

    per_slot: tuple[Fraction, ...]


def unit_price(model: PriceModel, load: Fraction) -> Fraction:
    """Unit price (c per kWh) at the given aggregate load (kWh)."""
    if load < 0:
        raise NegativeLoadError(f"load must be >= 0, got {load}")
    return model(load)


def price_vector(model: PriceModel, total_load) -> PriceVector:
    return PriceVector(tuple(unit_price(model, y) for y in total_load))


def production_cost(model: PriceModel, total_load) -> tuple[tuple[Fraction, ...], Fraction]:
    """Per-slot production cost (euro) and its sum.

    Cost per slot is unit price times load; the sum doubles as the system-wide
    objective that pro-rata billing distributes.
    """
    per_slot = tuple(unit_price(model, y) * y / CENTS_PER_EURO for y in total_load)
    return per_slot, sum(per_slot, Fraction(0))
