"""Domain types for the day-ahead load-scheduling game.

A player (household) owns appliances.  Each appliance is one of:

* ``FixedProfile``    - non-shiftable loads, energy pinned per slot;
* ``ShiftableProfile``- runs a fixed multi-slot profile contiguously from a
  chosen start slot inside its window, uninterrupted once started;
* ``ShiftableFlexible``- a total energy budget spread freely over its window,
  per-slot power between ``power_min`` and ``power_max`` while on (a slot with
  zero allocation counts as "off", so ``power_min`` binds only on slots with
  positive allocation).

All energies are kWh as exact ``Fraction`` values.  Power bounds are closed:
an allocation exactly at ``power_max`` is legal (the worked examples schedule
an electric car at full charging power).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import (
    DimensionError,
    InfeasibleApplianceError,
    MissingPlayerError,
    StrategySpaceError,
)

ZERO = Fraction(0)


@dataclass(frozen=True)
class TimeGrid:
    """Discretization of the scheduling day into equal slots."""

    slot_count: int = 24
    slot_duration_hours: Fraction = Fraction(1)

    def __post_init__(self):
        if self.slot_count < 1:
            raise ValueError(f"slot_count must be >= 1, got {self.slot_count}")
        if self.slot_duration_hours <= 0:
            raise ValueError("slot_duration_hours must be positive")

    def check_length(self, vector: Sequence, what: str = "vector") -> None:
        if len(vector) != self.slot_count:
            raise DimensionError(
                f"{what} has length {len(vector)}, grid has {self.slot_count} slots"
            )


@dataclass(frozen=True)
class FixedProfile:
    """Non-shiftable load: one energy value per slot of the grid."""

    profile: tuple[Fraction, ...]


@dataclass(frozen=True)
class ShiftableProfile:
    """Shiftable load with a fixed per-slot profile once started."""

    load_profile: tuple[Fraction, ...]
    window_start: int
    window_end: int


@dataclass(frozen=True)
class ShiftableFlexible:
    """Freely divisible energy budget inside a scheduling window."""

    total_energy: Fraction
    power_min: Fraction
    power_max: Fraction
    window_start: int
    window_end: int


ApplianceKind = Union[FixedProfile, ShiftableProfile, ShiftableFlexible]


@dataclass(frozen=True)
class Appliance:
    id: str
    kind: ApplianceKind


@dataclass(frozen=True)
class Player:
    id: str
    appliances: tuple[Appliance, ...]

    def appliance(self, appliance_id: str) -> Appliance:
        for a in self.appliances:
            if a.id == appliance_id:
                return a
        raise KeyError(f"player {self.id!r} has no appliance {appliance_id!r}")


def validate_appliance(appliance: Appliance, grid: TimeGrid) -> None:
    """Raise ValueError when an appliance breaks its structural invariants."""
    kind = appliance.kind
    name = f"appliance {appliance.id!r}"
    if isinstance(kind, FixedProfile):
        if len(kind.profile) != grid.slot_count:
            raise ValueError(
                f"{name}: fixed profile has {len(kind.profile)} slots, grid has {grid.slot_count}"
            )
        if any(v < 0 for v in kind.profile):
            raise ValueError(f"{name}: fixed profile values must be >= 0")
        return
    if not (0 <= kind.window_start <= kind.window_end < grid.slot_count):
        raise ValueError(
            f"{name}: window [{kind.window_start}, {kind.window_end}] "
            f"must satisfy 0 <= start <= end < {grid.slot_count}"
        )
    width = kind.window_end - kind.window_start + 1
    if isinstance(kind, ShiftableProfile):
        if not kind.load_profile:
            raise ValueError(f"{name}: load profile is empty")
        if any(v <= 0 for v in kind.load_profile):
            raise ValueError(f"{name}: load profile values must be > 0")
        if len(kind.load_profile) > width:
            raise ValueError(
                f"{name}: load profile of {len(kind.load_profile)} slots does not fit "
                f"window of {width} slots"
            )
    else:
        if kind.total_energy <= 0:
            raise ValueError(f"{name}: total energy must be > 0")
        if kind.power_min < 0 or kind.power_min > kind.power_max:
            raise ValueError(f"{name}: need 0 <= power_min <= power_max")
        if kind.total_energy > kind.power_max * width:
            raise ValueError(
                f"{name}: total energy {kind.total_energy} exceeds window capacity "
                f"{kind.power_max * width}"
            )


def validate_player(player: Player, grid: TimeGrid) -> None:
    ids = [a.id for a in player.appliances]
    if len(set(ids)) != len(ids):
        raise ValueError(f"player {player.id!r}: duplicate appliance ids")
    for a in player.appliances:
        validate_appliance(a, grid)


@dataclass(frozen=True)
class ApplianceSchedule:
    """Realized per-slot energy draw of one appliance."""

    appliance_id: str
    energy: tuple[Fraction, ...]


@dataclass(frozen=True)
class Violation:
    """One broken scheduling constraint; ``kind`` is a stable machine tag."""

    kind: str  # length | window | power_bounds | energy_sum | profile_mismatch
    message: str


def validate_schedule(
    appliance: Appliance, energy: Sequence[Fraction], grid: TimeGrid
) -> tuple[Violation, ...]:
    """Check a schedule vector against its appliance's constraints.

    Returns the (possibly empty) tuple of violations instead of raising, so
    callers can collect a full report.
    """
    out: list[Violation] = []
    if len(energy) != grid.slot_count:
        return (
            Violation(
                "length",
                f"schedule has {len(energy)} slots, grid has {grid.slot_count}",
            ),
        )
    kind = appliance.kind

    if isinstance(kind, FixedProfile):
        if tuple(energy) != kind.profile:
            out.append(Violation("profile_mismatch", "schedule differs from the fixed profile"))
        return tuple(out)

    window = range(kind.window_start, kind.window_end + 1)
    for h, v in enumerate(energy):
        if v != 0 and h not in window:
            out.append(
                Violation("window", f"slot {h} outside window [{kind.window_start}, {kind.window_end}]")
            )

    if isinstance(kind, ShiftableFlexible):
        for h in window:
            v = energy[h]
            if v == 0:
                continue  # appliance off this slot; standby bound does not apply
            if not (kind.power_min <= v <= kind.power_max):
                out.append(
                    Violation(
                        "power_bounds",
                        f"slot {h}: {v} outside [{kind.power_min}, {kind.power_max}]",
                    )
                )
        total = sum(energy, ZERO)
        if total != kind.total_energy:
            out.append(
                Violation("energy_sum", f"energy sums to {total}, required {kind.total_energy}")
            )
        return tuple(out)

    # ShiftableProfile: the nonzero part must be the stored run placed at one
    # feasible start, zeros elsewhere.
    length = len(kind.load_profile)
    first = next((h for h, v in enumerate(energy) if v != 0), None)
    if first is None:
        out.append(Violation("profile_mismatch", "schedule is all zero, run profile missing"))
        return tuple(out)
    if first < kind.window_start:
        out.append(Violation("window", f"run starts at slot {first}, before window start"))
        return tuple(out)
    if first + length - 1 > kind.window_end:
        out.append(
            Violation(
                "window",
                f"run starting at slot {first} overruns window end {kind.window_end}",
            )
        )
        return tuple(out)
    expected = [ZERO] * grid.slot_count
    expected[first : first + length] = list(kind.load_profile)
    if list(energy) != expected:
        out.append(
            Violation("profile_mismatch", f"schedule is not the run profile placed at slot {first}")
        )
    return tuple(out)


def aggregate_strategy(
    schedules: Iterable[ApplianceSchedule], grid: TimeGrid
) -> tuple[Fraction, ...]:
    """Slot-wise sum of appliance schedules: the player's strategy vector."""
    total = [ZERO] * grid.slot_count
    for sched in schedules:
        grid.check_length(sched.energy, f"schedule for {sched.appliance_id!r}")
        for h, v in enumerate(sched.energy):
            total[h] += v
    return tuple(total)


# --- enumeration of a player's pure strategies ------------------------------


def profile_start_slots(kind: ShiftableProfile) -> range:
    return range(kind.window_start, kind.window_end - len(kind.load_profile) + 2)


def flexible_unit_bounds(kind: ShiftableFlexible, quantum: Fraction) -> tuple[int, int, int]:
    """(total units, min units per active slot, max units per slot) on the quantum grid."""
    if quantum <= 0:
        raise ValueError(f"quantum must be positive, got {quantum}")
    units = kind.total_energy / quantum
    if units.denominator != 1:
        raise InfeasibleApplianceError(
            "?", f"total energy {kind.total_energy} is not a multiple of quantum {quantum}"
        )
    max_units = int(kind.power_max / quantum)  # floor: closed upper bound
    if kind.power_min <= 0:
        min_units = 1
    else:
        q, r = divmod(kind.power_min, quantum)
        min_units = int(q) + (1 if r else 0)  # ceil: closed lower bound
    return int(units), min_units, max_units


def _allocation_counts(slots: int, units: int, min_units: int, max_units: int) -> int:
    """Number of ways to split `units` over `slots`, each slot 0 or in [min, max] units."""
    ways = [1] + [0] * units
    for _ in range(slots):
        nxt = [0] * (units + 1)
        for have, w in enumerate(ways):
            if not w:
                continue
            nxt[have] += w
            for take in range(min_units, max_units + 1):
                if have + take > units:
                    break
                nxt[have + take] += w
        ways = nxt
    return ways[units]


def _completable(rest: int, slots_left: int, min_units: int, max_units: int) -> bool:
    """Can `rest` units be spread over `slots_left` slots, each 0 or in [min, max]?"""
    if rest == 0:
        return True
    if slots_left == 0:
        return False
    # k active slots hold between k*min and k*max units
    for k in range(1, slots_left + 1):
        if k * min_units <= rest <= k * max_units:
            return True
    return False


def _iter_allocations(
    slots: Sequence[int], units: int, min_units: int, max_units: int
) -> Iterator[tuple[int, ...]]:
    """Yield unit allocations over the given slots, lexicographically by slot order."""
    n = len(slots)

    def feasible(k: int, r: int) -> bool:
        return _completable(r, k, min_units, max_units)

    cur: list[int] = []

    def rec(i: int, left: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            if left == 0:
                yield tuple(cur)
            return
        choices = [0] + list(range(min_units, max_units + 1))
        for take in choices:
            if take > left:
                break
            if not feasible(n - i - 1, left - take):
                continue
            cur.append(take)
            yield from rec(i + 1, left - take)
            cur.pop()

    yield from rec(0, units)


def flexible_allocation_count(kind: ShiftableFlexible, quantum: Fraction) -> int:
    units, lo, hi = flexible_unit_bounds(kind, quantum)
    width = kind.window_end - kind.window_start + 1
    return _allocation_counts(width, units, lo, hi)


def iter_flexible_schedules(
    appliance: Appliance, grid: TimeGrid, quantum: Fraction
) -> Iterator[ApplianceSchedule]:
    kind = appliance.kind
    assert isinstance(kind, ShiftableFlexible)
    try:
        units, lo, hi = flexible_unit_bounds(kind, quantum)
    except InfeasibleApplianceError as exc:
        raise InfeasibleApplianceError(appliance.id, str(exc)) from None
    window = list(range(kind.window_start, kind.window_end + 1))
    found = False
    for alloc in _iter_allocations(window, units, lo, hi):
        found = True
        vec = [ZERO] * grid.slot_count
        for slot, k in zip(window, alloc):
            vec[slot] = k * quantum
        yield ApplianceSchedule(appliance.id, tuple(vec))
    if not found:
        raise InfeasibleApplianceError(
            appliance.id,
            f"no allocation of {kind.total_energy} kWh fits bounds "
            f"[{kind.power_min}, {kind.power_max}] on a {quantum} kWh grid",
        )


def front_loaded_allocation(
    kind: ShiftableFlexible, grid: TimeGrid, quantum: Fraction
) -> tuple[Fraction, ...]:
    """Earliest-slot, max-power allocation: the no-coordination baseline.

    This is the lexicographically largest feasible allocation, found by taking
    the biggest completable value slot by slot.
    """
    units, lo, hi = flexible_unit_bounds(kind, quantum)
    window = list(range(kind.window_start, kind.window_end + 1))
    vec = [ZERO] * grid.slot_count
    left = units
    for i, slot in enumerate(window):
        if left == 0:
            break
        slots_left = len(window) - i - 1
        for take in range(min(hi, left), -1, -1):
            if take != 0 and take < lo:
                continue
            if _completable(left - take, slots_left, lo, hi):
                vec[slot] = take * quantum
                left -= take
                break
        else:
            break
    if left:
        raise InfeasibleApplianceError(
            "?",
            f"no allocation of {kind.total_energy} kWh fits bounds "
            f"[{kind.power_min}, {kind.power_max}] on a {quantum} kWh grid",
        )
    return tuple(vec)


def schedule_for_start(
    appliance: Appliance, start: int, grid: TimeGrid
) -> ApplianceSchedule:
    kind = appliance.kind
    assert isinstance(kind, ShiftableProfile)
    vec = [ZERO] * grid.slot_count
    vec[start : start + len(kind.load_profile)] = list(kind.load_profile)
    return ApplianceSchedule(appliance.id, tuple(vec))


@dataclass(frozen=True)
class PlayerStrategy:
    """One point of a player's pure-strategy set."""

    schedules: tuple[ApplianceSchedule, ...]
    aggregate: tuple[Fraction, ...]
    label: str
    start_slots: tuple[int, ...]  # start slot per shiftable-profile appliance


def _appliance_choices(
    player: Player, grid: TimeGrid, quantum: Fraction
) -> list[list[tuple[ApplianceSchedule, int | None, str]]]:
    """Per appliance: list of (schedule, start-or-None, label fragment)."""
    per_appliance = []
    for a in player.appliances:
        kind = a.kind
        if isinstance(kind, FixedProfile):
            per_appliance.append([(ApplianceSchedule(a.id, kind.profile), None, "")])
        elif isinstance(kind, ShiftableProfile):
            starts = list(profile_start_slots(kind))
            if not starts:
                raise InfeasibleApplianceError(a.id, "no feasible start slot")
            per_appliance.append(
                [(schedule_for_start(a, s, grid), s, f"{a.id}@{s}") for s in starts]
            )
        else:
            choices = [
                (sched, None, f"{a.id}=[{','.join(str(v) for v in sched.energy)}]")
                for sched in iter_flexible_schedules(a, grid, quantum)
            ]
            per_appliance.append(choices)
    return per_appliance


def count_raw_combinations(player: Player, grid: TimeGrid, quantum: Fraction) -> int:
    """Cartesian-product size of per-appliance choices, before deduplication."""
    total = 1
    for a in player.appliances:
        kind = a.kind
        if isinstance(kind, FixedProfile):
            continue
        if isinstance(kind, ShiftableProfile):
            total *= len(profile_start_slots(kind))
        else:
            total *= flexible_allocation_count(kind, quantum)
    return total


def enumerate_pure_strategies(
    player: Player,
    grid: TimeGrid,
    quantum: Fraction,
    cap: int = 10**6,
) -> list[PlayerStrategy]:
    """All pure strategies of a player on the quantum grid.

    Distinct appliance timings that produce the same aggregate vector are one
    strategy: payoffs depend on the aggregate only.  The first combination in
    enumeration order (earlier starts first) is kept as the representative.
    """
    raw = count_raw_combinations(player, grid, quantum)
    if raw > cap:
        raise StrategySpaceError(raw, cap)
    per_appliance = _appliance_choices(player, grid, quantum)
    seen: dict[tuple[Fraction, ...], None] = {}
    out: list[PlayerStrategy] = []
    for combo in itertools.product(*per_appliance):
        schedules = tuple(c[0] for c in combo)
        aggregate = aggregate_strategy(schedules, grid)
        if aggregate in seen:
            continue
        seen[aggregate] = None
        starts = tuple(c[1] for c in combo if c[1] is not None)
        label = "|".join(c[2] for c in combo if c[2]) or "(fixed)"
        out.append(PlayerStrategy(schedules, aggregate, label, starts))
    return out


def default_initial_schedules(
    player: Player, grid: TimeGrid, quantum: Fraction
) -> tuple[ApplianceSchedule, ...]:
    """Earliest-start / front-loaded schedules: the pre-coordination baseline."""
    out = []
    for a in player.appliances:
        kind = a.kind
        if isinstance(kind, FixedProfile):
            out.append(ApplianceSchedule(a.id, kind.profile))
        elif isinstance(kind, ShiftableProfile):
            starts = profile_start_slots(kind)
            if not starts:
                raise InfeasibleApplianceError(a.id, "no feasible start slot")
            out.append(schedule_for_start(a, starts[0], grid))
        else:
            try:
                vec = front_loaded_allocation(kind, grid, quantum)
            except InfeasibleApplianceError as exc:
                raise InfeasibleApplianceError(a.id, str(exc)) from None
            out.append(ApplianceSchedule(a.id, vec))
    return tuple(out)


# --- joint strategy profiles -------------------------------------------------


@dataclass(frozen=True)
class StrategyProfile:
    """A full joint schedule: per player, per appliance, with cached sums."""

    grid: TimeGrid
    players: tuple[Player, ...]
    schedules: Mapping[str, tuple[ApplianceSchedule, ...]]
    aggregates: Mapping[str, tuple[Fraction, ...]] = field(init=False, default=None)
    total_load: tuple[Fraction, ...] = field(init=False, default=None)

    def __post_init__(self):
        aggregates = {}
        total = [ZERO] * self.grid.slot_count
        for p in self.players:
            if p.id not in self.schedules:
                raise MissingPlayerError(f"profile lacks schedules for player {p.id!r}")
            agg = aggregate_strategy(self.schedules[p.id], self.grid)
            aggregates[p.id] = agg
            for h, v in enumerate(agg):
                total[h] += v
        object.__setattr__(self, "aggregates", aggregates)
        object.__setattr__(self, "total_load", tuple(total))

    def player(self, player_id: str) -> Player:
        for p in self.players:
            if p.id == player_id:
                return p
        raise MissingPlayerError(f"unknown player {player_id!r}")

    def aggregate_without(self, player_id: str) -> tuple[Fraction, ...]:
        own = self.aggregates[player_id]
        return tuple(t - o for t, o in zip(self.total_load, own))

    def replace(self, player_id: str, schedules: Sequence[ApplianceSchedule]) -> "StrategyProfile":
        if player_id not in self.schedules:
            raise MissingPlayerError(f"unknown player {player_id!r}")
        new = dict(self.schedules)
        new[player_id] = tuple(schedules)
        return StrategyProfile(self.grid, self.players, new)

    def state_key(self) -> tuple:
        """Hashable exact snapshot of every schedule, for cycle detection."""
        return tuple(
            (pid, tuple((s.appliance_id, s.energy) for s in self.schedules[pid]))
            for pid in sorted(self.schedules)
        )

    def total_energy(self, player_id: str) -> Fraction:
        return sum(self.aggregates[player_id], ZERO)

    def grand_total_energy(self) -> Fraction:
        return sum(self.total_load, ZERO)
