"""Single-player best response against the aggregate load of everyone else.

Players never see other players' individual schedules, only the slot-wise sum
of their loads; that aggregate plus the price model fully determines a
player's bill for any candidate schedule of its own.

Search strategy: shiftable-profile appliances are enumerated over their start
slots; flexible appliances are allocated one quantum at a time onto the slot
with the lowest marginal increase of the player's own bill.  For convex
prices and a contiguous allocation grid (power_min <= quantum) this greedy is
an exact minimizer; when power_min leaves a gap in the per-slot grid the
search falls back to exhaustive allocation enumeration so the result stays
exact.  Hot paths run on integers: every load is scaled by the common
denominator of all quantities so candidate comparison needs no rational
arithmetic for integer-exponent power-law prices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    DimensionError,
    InfeasibleApplianceError,
    NegativeLoadError,
    StrategySpaceError,
)
from .exactmath import common_denominator
from .model import (
    Appliance,
    ApplianceSchedule,
    FixedProfile,
    Player,
    PlayerStrategy,
    ShiftableFlexible,
    ShiftableProfile,
    TimeGrid,
    ZERO,
    _completable,
    _iter_allocations,
    flexible_unit_bounds,
    profile_start_slots,
    schedule_for_start,
)
from .pricing import CENTS_PER_EURO, PowerLaw, PriceModel, unit_price
from .utility import HourlyPrice, ProRataCost, UtilityModel, ValueOfEnergy, value_of_energy

DEFAULT_QUANTUM = Fraction(1, 2)
DEFAULT_TOLERANCE = Fraction(1, 10**9)


@dataclass(frozen=True)
class OpponentAggregate:
    """Slot-wise sum of all other players' strategies."""

    load: tuple[Fraction, ...]

    def __post_init__(self):
        if any(v < 0 for v in self.load):
            raise NegativeLoadError("opponent aggregate has a negative slot")


@dataclass(frozen=True)
class BestResponse:
    schedules: tuple[ApplianceSchedule, ...]
    aggregate: tuple[Fraction, ...]
    cost: Fraction  # the player's utility at this strategy, lower is better
    improved: bool  # strictly below the incumbent cost by more than the tolerance


class _Scorer:
    """Comparable candidate scores against a fixed opponent load.

    Scores are monotone transforms of the player's objective: integers for
    power-law prices with integer exponent, exact Fractions otherwise.  Equal
    score means exactly equal cost, so tie-breaking stays exact.
    """

    def __init__(self, base_units: Sequence[int], denom: int, model: PriceModel, own_bill: bool):
        self.base = list(base_units)
        self.denom = denom
        self.model = model
        self.own_bill = own_bill
        self._cache: dict[int, Fraction] = {}
        if isinstance(model, PowerLaw) and model.exponent.denominator == 1:
            self._exp = int(model.exponent)
        else:
            self._exp = None

    def _price(self, units: int) -> Fraction:
        p = self._cache.get(units)
        if p is None:
            p = unit_price(self.model, Fraction(units, self.denom))
            self._cache[units] = p
        return p

    def slot_score(self, slot: int, own: int) -> int | Fraction:
        total = self.base[slot] + own
        if self._exp is not None:
            return total**self._exp * own if self.own_bill else total ** (self._exp + 1)
        price = self._price(total)
        return price * own if self.own_bill else price * total

    def score(self, own_units: Sequence[int]) -> int | Fraction:
        return sum(self.slot_score(h, o) for h, o in enumerate(own_units))

    def add_delta(self, own_units: Sequence[int], slot: int, add: int) -> int | Fraction:
        before = self.slot_score(slot, own_units[slot])
        after = self.slot_score(slot, own_units[slot] + add)
        return after - before

    def cost_eur(self, score) -> Fraction:
        """Exact euro value of a score."""
        if self._exp is not None:
            power = self._exp if self.own_bill else self._exp + 1
            return self.model.scale * Fraction(score, self.denom**power) / (
                CENTS_PER_EURO * self.denom
            )
        return Fraction(score) / (CENTS_PER_EURO * self.denom)


@dataclass
class _FlexState:
    appliance: Appliance
    window: list[int]
    lo: int
    hi: int
    units: int
    alloc: list[int]  # units per window slot


def _greedy_fill(flexes: list[_FlexState], own: list[int], scorer: _Scorer) -> None:
    """Place all remaining quanta, cheapest marginal slot first.

    Ties go to the lowest slot index, then the earlier appliance.  Requires
    every flex to have lo == 1 (contiguous grid), which makes any partial
    placement completable and the greedy exact for convex prices.
    """
    remaining = sum(f.units - sum(f.alloc) for f in flexes)
    while remaining:
        best = None
        for fi, f in enumerate(flexes):
            if sum(f.alloc) == f.units:
                continue
            for wi, slot in enumerate(f.window):
                if f.alloc[wi] + 1 > f.hi:
                    continue
                key = (scorer.add_delta(own, slot, 1), slot, fi)
                if best is None or key < best[0]:
                    best = (key, fi, wi, slot)
        if best is None:
            raise InfeasibleApplianceError(
                flexes[0].appliance.id, "allocation ran out of slot capacity"
            )
        _, fi, wi, slot = best
        flexes[fi].alloc[wi] += 1
        own[slot] += 1
        remaining -= 1


def _canonicalize_ties(flexes: list[_FlexState], own: list[int], scorer: _Scorer) -> None:
    """Resolve exact cost ties toward the lexicographically smaller aggregate.

    Moves single quanta from an earlier slot to a later one whenever the move
    is exactly cost-neutral; each accepted move lowers the aggregate in lex
    order, so the loop terminates.
    """
    moved = True
    while moved:
        moved = False
        for f in flexes:
            for i, src in enumerate(f.window):
                if f.alloc[i] < 1 or (f.alloc[i] - 1 != 0 and f.alloc[i] - 1 < f.lo):
                    continue
                for j in range(i + 1, len(f.window)):
                    dst = f.window[j]
                    if f.alloc[j] + 1 > f.hi or (f.alloc[j] == 0 and f.lo > 1):
                        continue
                    delta = scorer.add_delta(own, src, -1) + scorer.add_delta(
                        [o - (1 if h == src else 0) for h, o in enumerate(own)], dst, 1
                    )
                    if delta == 0:
                        f.alloc[i] -= 1
                        f.alloc[j] += 1
                        own[src] -= 1
                        own[dst] += 1
                        moved = True
    return None


def marginal_allocation(
    appliance: Appliance,
    opponents: OpponentAggregate | Sequence[Fraction],
    price_model: PriceModel,
    quantum: Fraction,
    *,
    grid: TimeGrid,
    own_base: Sequence[Fraction] | None = None,
) -> tuple[Fraction, ...]:
    """Greedy quantum-by-quantum allocation of one flexible appliance.

    `own_base` is the player's other load, which belongs to the bill being
    minimized; opponent load only moves the price.  Ties go to the lowest
    slot index, so under a flat tariff the energy lands in the earliest slots
    at full power.
    """
    kind = appliance.kind
    if not isinstance(kind, ShiftableFlexible):
        raise ValueError(f"appliance {appliance.id!r} is not a flexible load")
    load = opponents.load if isinstance(opponents, OpponentAggregate) else tuple(opponents)
    grid.check_length(load, "opponent aggregate")
    base_own = tuple(own_base) if own_base is not None else (ZERO,) * grid.slot_count
    grid.check_length(base_own, "own base load")

    denom = common_denominator([*load, *base_own, quantum, kind.total_energy,
                                kind.power_min, kind.power_max])
    try:
        units, lo, hi = flexible_unit_bounds(kind, quantum)
    except InfeasibleApplianceError as exc:
        raise InfeasibleApplianceError(appliance.id, str(exc)) from None
    window = list(range(kind.window_start, kind.window_end + 1))
    if not _completable(units, len(window), lo, hi):
        raise InfeasibleApplianceError(
            appliance.id,
            f"no allocation of {kind.total_energy} kWh fits bounds "
            f"[{kind.power_min}, {kind.power_max}] on a {quantum} kWh grid",
        )
    q_units = int(quantum * denom)
    own = [int((b + o) * denom) for b, o in zip(base_own, [ZERO] * grid.slot_count)]
    base = [int(v * denom) for v in load]
    scorer = _Scorer(base, denom, price_model, own_bill=True)
    own = [int(b * denom) for b in base_own]

    flex = _FlexState(appliance, window, lo, hi, units, [0] * len(window))
    if lo <= 1:
        # work in single-quantum steps on the scaled grid
        _greedy_one(flex, own, scorer, q_units)
    else:
        _greedy_gapped(flex, own, scorer, q_units)
    vec = [ZERO] * grid.slot_count
    for wi, slot in enumerate(window):
        vec[slot] = flex.alloc[wi] * quantum
    return tuple(vec)


def _greedy_one(flex: _FlexState, own: list[int], scorer: _Scorer, q_units: int) -> None:
    placed = 0
    while placed < flex.units:
        best = None
        for wi, slot in enumerate(flex.window):
            if flex.alloc[wi] + 1 > flex.hi:
                continue
            key = (scorer.add_delta(own, slot, q_units), slot)
            if best is None or key < best[0]:
                best = (key, wi, slot)
        if best is None:
            raise InfeasibleApplianceError(flex.appliance.id, "ran out of slot capacity")
        _, wi, slot = best
        flex.alloc[wi] += 1
        own[slot] += q_units
        placed += 1


def _greedy_gapped(flex: _FlexState, own: list[int], scorer: _Scorer, q_units: int) -> None:
    """Greedy with opening blocks when power_min spans several quanta.

    Opening a fresh slot must jump straight to `lo` quanta; a completability
    check keeps the remainder placeable.
    """
    placed = 0
    while placed < flex.units:
        left = flex.units - placed
        best = None
        for wi, slot in enumerate(flex.window):
            step = 1 if flex.alloc[wi] >= flex.lo else flex.lo
            if flex.alloc[wi] + step > flex.hi or step > left:
                continue
            if not _gap_completable(left - step, flex, wi, step):
                continue
            key = (scorer.add_delta(own, slot, step * q_units), slot)
            if best is None or key < best[0]:
                best = (key, wi, slot, step)
        if best is None:
            raise InfeasibleApplianceError(
                flex.appliance.id, "allocation stuck under power_min opening blocks"
            )
        _, wi, slot, step = best
        flex.alloc[wi] += step
        own[slot] += step * q_units
        placed += step


def _gap_completable(rest: int, flex: _FlexState, wi: int, step: int) -> bool:
    if rest == 0:
        return True
    alloc = list(flex.alloc)
    alloc[wi] += step
    open_cap = sum(flex.hi - a for a in alloc if a > 0)
    fresh = sum(1 for a in alloc if a == 0)
    reachable = {v for v in range(min(open_cap, rest) + 1)}
    for _ in range(fresh):
        if rest in reachable:
            return True
        reachable |= {
            v + t for v in reachable for t in range(flex.lo, flex.hi + 1) if v + t <= rest
        }
    return rest in reachable


def _own_bill_mode(utility_model: UtilityModel) -> bool:
    # Pro-rata players hold a fixed share of the total production cost, so
    # their objective reduces to that total; everyone else minimizes their
    # own bill (the value-of-energy term is constant in the player's moves).
    return not isinstance(utility_model, ProRataCost)


def best_response(
    player: Player,
    opponents: OpponentAggregate,
    current: Sequence[ApplianceSchedule],
    utility_model: UtilityModel,
    price_model: PriceModel,
    *,
    grid: TimeGrid,
    quantum: Fraction = DEFAULT_QUANTUM,
    tolerance: Fraction = DEFAULT_TOLERANCE,
    cap: int = 10**6,
) -> BestResponse:
    """Exact cost-minimizing strategy of one player, and whether it beats the
    incumbent by more than the tolerance.

    Ties are broken toward earlier profile start slots, then the
    lexicographically smaller aggregate vector.
    """
    grid.check_length(opponents.load, "opponent aggregate")
    own_bill = _own_bill_mode(utility_model)

    numbers: list[Fraction] = [*opponents.load, quantum]
    for a in player.appliances:
        kind = a.kind
        if isinstance(kind, FixedProfile):
            numbers.extend(kind.profile)
        elif isinstance(kind, ShiftableProfile):
            numbers.extend(kind.load_profile)
        else:
            numbers.extend((kind.total_energy, kind.power_min, kind.power_max))
    for s in current:
        numbers.extend(s.energy)
    denom = common_denominator(numbers)
    base_units = [int(v * denom) for v in opponents.load]
    scorer = _Scorer(base_units, denom, price_model, own_bill)
    q_units = int(quantum * denom)

    fixed_scheds: dict[str, ApplianceSchedule] = {}
    fixed_own = [0] * grid.slot_count
    profile_apps: list[Appliance] = []
    flex_apps: list[Appliance] = []
    for a in player.appliances:
        kind = a.kind
        if isinstance(kind, FixedProfile):
            fixed_scheds[a.id] = ApplianceSchedule(a.id, kind.profile)
            for h, v in enumerate(kind.profile):
                fixed_own[h] += int(v * denom)
        elif isinstance(kind, ShiftableProfile):
            profile_apps.append(a)
        else:
            flex_apps.append(a)

    start_lists = []
    combos = 1
    for a in profile_apps:
        starts = list(profile_start_slots(a.kind))
        if not starts:
            raise InfeasibleApplianceError(a.id, "no feasible start slot")
        start_lists.append(starts)
        combos *= len(starts)
    if combos > cap:
        raise StrategySpaceError(combos, cap)

    flex_bounds = []
    gap_search = False
    for a in flex_apps:
        try:
            units, lo, hi = flexible_unit_bounds(a.kind, quantum)
        except InfeasibleApplianceError as exc:
            raise InfeasibleApplianceError(a.id, str(exc)) from None
        window = list(range(a.kind.window_start, a.kind.window_end + 1))
        if not _completable(units, len(window), lo, hi):
            raise InfeasibleApplianceError(
                a.id,
                f"no allocation of {a.kind.total_energy} kWh fits bounds "
                f"[{a.kind.power_min}, {a.kind.power_max}] on a {quantum} kWh grid",
            )
        gap_search = gap_search or lo > 1
        flex_bounds.append((a, window, lo, hi, units))

    best_key = None
    best_pick = None
    for starts in itertools.product(*start_lists) if start_lists else [()]:
        own = list(fixed_own)
        prof_scheds = []
        for a, s in zip(profile_apps, starts):
            sched = schedule_for_start(a, s, grid)
            prof_scheds.append(sched)
            for h, v in enumerate(sched.energy):
                own[h] += int(v * denom)
        for flex_allocs, own_after in _flex_candidates(
            flex_bounds, own, scorer, q_units, gap_search, cap
        ):
            score = scorer.score(own_after)
            key = (score, tuple(starts), tuple(own_after))
            if best_key is None or key < best_key:
                best_key = key
                best_pick = (tuple(starts), prof_scheds, flex_allocs, own_after)

    starts, prof_scheds, flex_allocs, own_after = best_pick
    schedules = _assemble(player, fixed_scheds, profile_apps, prof_scheds, flex_apps,
                          flex_allocs, quantum, grid)
    aggregate = tuple(Fraction(u, denom) for u in own_after)

    best_cost = _candidate_utility(player, scorer, own_after, utility_model, denom)
    incumbent_units = [0] * grid.slot_count
    for s in current:
        grid.check_length(s.energy, f"schedule for {s.appliance_id!r}")
        for h, v in enumerate(s.energy):
            incumbent_units[h] += int(v * denom)
    incumbent_cost = _candidate_utility(player, scorer, incumbent_units, utility_model, denom)

    return BestResponse(
        schedules=schedules,
        aggregate=aggregate,
        cost=best_cost,
        improved=incumbent_cost - best_cost > tolerance,
    )


def _flex_candidates(flex_bounds, own_base, scorer, q_units, gap_search, cap):
    """Yield (allocations, own-units-after) for the flexible appliances.

    One canonical candidate from the greedy when the grid is contiguous,
    the full exhaustive product otherwise (exactness over speed in the
    nonconvex power_min corner).
    """
    if not flex_bounds:
        yield (), list(own_base)
        return
    if not gap_search:
        flexes = [
            _FlexState(a, window, lo, hi, units, [0] * len(window))
            for a, window, lo, hi, units in flex_bounds
        ]
        own = list(own_base)
        _greedy_fill_scaled(flexes, own, scorer, q_units)
        _canonicalize_ties_scaled(flexes, own, scorer, q_units)
        yield tuple(tuple(f.alloc) for f in flexes), own
        return
    total = 1
    for a, window, lo, hi, units in flex_bounds:
        total *= _count_allocs(len(window), units, lo, hi)
        if total > cap:
            raise StrategySpaceError(total, cap)
    pools = [
        list(_iter_allocations(window, units, lo, hi))
        for a, window, lo, hi, units in flex_bounds
    ]
    for allocs in itertools.product(*pools):
        own = list(own_base)
        for (a, window, lo, hi, units), alloc in zip(flex_bounds, allocs):
            for slot, k in zip(window, alloc):
                own[slot] += k * q_units
        yield tuple(allocs), own


def _count_allocs(slots, units, lo, hi):
    from .model import _allocation_counts

    return _allocation_counts(slots, units, lo, hi)


def _greedy_fill_scaled(flexes, own, scorer, q_units):
    remaining = sum(f.units - sum(f.alloc) for f in flexes)
    while remaining:
        best = None
        for fi, f in enumerate(flexes):
            if sum(f.alloc) == f.units:
                continue
            for wi, slot in enumerate(f.window):
                if f.alloc[wi] + 1 > f.hi:
                    continue
                key = (scorer.add_delta(own, slot, q_units), slot, fi)
                if best is None or key < best[0]:
                    best = (key, fi, wi, slot)
        if best is None:
            raise InfeasibleApplianceError(flexes[0].appliance.id, "ran out of slot capacity")
        _, fi, wi, slot = best
        flexes[fi].alloc[wi] += 1
        own[slot] += q_units
        remaining -= 1


def _canonicalize_ties_scaled(flexes, own, scorer, q_units):
    """Move quanta later in the day whenever exactly cost-neutral, so the
    returned minimizer has the lexicographically smallest reachable aggregate."""
    moved = True
    while moved:
        moved = False
        for f in flexes:
            for i in range(len(f.window)):
                if f.alloc[i] < 1:
                    continue
                src = f.window[i]
                for j in range(i + 1, len(f.window)):
                    if f.alloc[j] + 1 > f.hi:
                        continue
                    dst = f.window[j]
                    d_src = scorer.add_delta(own, src, -q_units)
                    own[src] -= q_units
                    d_dst = scorer.add_delta(own, dst, q_units)
                    own[src] += q_units
                    if d_src + d_dst == 0:
                        f.alloc[i] -= 1
                        f.alloc[j] += 1
                        own[src] -= q_units
                        own[dst] += q_units
                        moved = True


def _assemble(player, fixed_scheds, profile_apps, prof_scheds, flex_apps, flex_allocs,
              quantum, grid):
    """Schedules tuple in the player's original appliance order."""
    by_id: dict[str, ApplianceSchedule] = dict(fixed_scheds)
    for a, sched in zip(profile_apps, prof_scheds):
        by_id[a.id] = sched
    for a, alloc in zip(flex_apps, flex_allocs):
        vec = [ZERO] * grid.slot_count
        window = range(a.kind.window_start, a.kind.window_end + 1)
        for slot, k in zip(window, alloc):
            vec[slot] = k * quantum
        by_id[a.id] = ApplianceSchedule(a.id, tuple(vec))
    return tuple(by_id[a.id] for a in player.appliances)


def _candidate_utility(player, scorer, own_units, utility_model, denom) -> Fraction:
    base_cost = scorer.cost_eur(scorer.score(own_units))
    if isinstance(utility_model, HourlyPrice):
        return base_cost
    if isinstance(utility_model, ProRataCost):
        own_energy = Fraction(sum(own_units), denom)
        opp_energy = Fraction(sum(scorer.base), denom)
        total = own_energy + opp_energy
        if total == 0:
            from .errors import ZeroTotalLoadError

            raise ZeroTotalLoadError("pro-rata share undefined: total energy is zero")
        return own_energy / total * base_cost
    params = utility_model.params_for(player.id)
    own_energy = Fraction(sum(own_units), denom)
    return base_cost - value_of_energy(params, utility_model.avg_price, own_energy)


def strategy_cost(
    strategy: PlayerStrategy,
    player: Player,
    opponents: OpponentAggregate,
    utility_model: UtilityModel,
    price_model: PriceModel,
    *,
    grid: TimeGrid,
) -> Fraction:
    """Utility of one enumerated strategy against a fixed opponent aggregate.

    The brute-force oracle that best_response is checked against.
    """
    numbers = [*opponents.load, *strategy.aggregate]
    denom = common_denominator(numbers)
    scorer = _Scorer([int(v * denom) for v in opponents.load], denom, price_model,
                     _own_bill_mode(utility_model))
    own_units = [int(v * denom) for v in strategy.aggregate]
    return _candidate_utility(player, scorer, own_units, utility_model, denom)
