"""Exception hierarchy shared across the package."""

from __future__ import annotations


class LoadGameError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LoadGameError):
    """A vector does not match the grid's slot count."""


class NegativeLoadError(LoadGameError):
    """A load value outside the model's domain (negative kWh)."""


class MissingPlayerError(LoadGameError):
    """A strategy profile lacks schedules for a referenced player."""


class ZeroTotalLoadError(LoadGameError):
    """An operation that divides by total energy got an all-zero profile."""


class InfeasibleApplianceError(LoadGameError):
    """No valid schedule exists for an appliance under its constraints."""

    def __init__(self, appliance_id: str, message: str):
        super().__init__(f"appliance {appliance_id!r}: {message}")
        self.appliance_id = appliance_id


class StrategySpaceError(LoadGameError):
    """The raw strategy combination count exceeds the configured cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(f"strategy space of {count} combinations exceeds cap {cap}")
        self.count = count
        self.cap = cap


class ProfileMismatchError(LoadGameError):
    """Two profiles differ somewhere other than the acting player."""


class ScenarioError(LoadGameError):
    """A scenario file failed to parse or validate; carries field context."""

    def __init__(self, message: str, *, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
