"""Per-player billing models.

All three models return euro with the convention that lower is better, so
one minimization path serves every variant:

* hourly price: own load priced slot by slot at the load-dependent tariff;
* pro-rata: a share of the total production cost, proportional to the
  player's total energy, independent of timing;
* value-of-energy: hourly cost minus a per-player valuation term that is
  constant in the player's own scheduling, so it never moves a best response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import MissingPlayerError, ZeroTotalLoadError
from .exactmath import exact_exp
from .model import Player, StrategyProfile
from .pricing import CENTS_PER_EURO, PriceModel, price_vector, production_cost


@dataclass(frozen=True)
class HourlyPrice:
    kind: str = field(default="hourly_price", init=False)


@dataclass(frozen=True)
class ProRataCost:
    kind: str = field(default="pro_rata_cost", init=False)


@dataclass(frozen=True)
class EnergyValueParams:
    """Per-player valuation parameters for the value-of-energy model."""

    energy_cap: Fraction  # kWh the player could consume at most
    saturation_rate: Fraction  # 1/kWh; higher means value saturates sooner

    def __post_init__(self):
        if self.saturation_rate <= 0:
            raise ValueError("saturation_rate must be > 0")
        if self.energy_cap < 0:
            raise ValueError("energy_cap must be >= 0")


@dataclass(frozen=True)
class ValueOfEnergy:
    avg_price: Fraction  # c per kWh
    per_player: Mapping[str, EnergyValueParams]
    kind: str = field(default="value_of_energy", init=False)

    def params_for(self, player_id: str) -> EnergyValueParams:
        try:
            return self.per_player[player_id]
        except KeyError:
            raise MissingPlayerError(
                f"value-of-energy parameters missing for player {player_id!r}"
            ) from None


UtilityModel = HourlyPrice | ProRataCost | ValueOfEnergy


def player_cost_hourly(
    profile: StrategyProfile, player: Player | str, model: PriceModel
) -> Fraction:
    """Euro bill of one player when every slot is priced at the total load."""
    pid = player if isinstance(player, str) else player.id
    if pid not in profile.aggregates:
        raise MissingPlayerError(f"profile lacks player {pid!r}")
    prices = price_vector(model, profile.total_load).per_slot
    own = profile.aggregates[pid]
    return sum((p * s for p, s in zip(prices, own)), Fraction(0)) / CENTS_PER_EURO


def player_cost_prorata(
    profile: StrategyProfile, player: Player | str, model: PriceModel
) -> Fraction:
    """Energy-proportional share of the total production cost."""
    pid = player if isinstance(player, str) else player.id
    if pid not in profile.aggregates:
        raise MissingPlayerError(f"profile lacks player {pid!r}")
    grand = profile.grand_total_energy()
    if grand == 0:
        raise ZeroTotalLoadError("pro-rata share undefined: total energy is zero")
    _, total_cost = production_cost(model, profile.total_load)
    return profile.total_energy(pid) / grand * total_cost


def value_of_energy(params: EnergyValueParams, avg_price: Fraction, total_energy: Fraction) -> Fraction:
    """Saturating valuation of consuming `total_energy` kWh, in euro."""
    exponent = -params.saturation_rate * total_energy
    return avg_price * params.energy_cap * (1 - exact_exp(exponent)) / CENTS_PER_EURO


def utility(
    profile: StrategyProfile,
    player: Player | str,
    utility_model: UtilityModel,
    price_model: PriceModel,
) -> Fraction:
    """Dispatch to the configured billing model; lower is better."""
    pid = player if isinstance(player, str) else player.id
    if isinstance(utility_model, HourlyPrice):
        return player_cost_hourly(profile, pid, price_model)
    if isinstance(utility_model, ProRataCost):
        return player_cost_prorata(profile, pid, price_model)
    params = utility_model.params_for(pid)
    cost = player_cost_hourly(profile, pid, price_model)
    value = value_of_energy(params, utility_model.avg_price, profile.total_energy(pid))
    return cost - value
