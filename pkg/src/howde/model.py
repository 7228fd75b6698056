"""Domain model: stop records, hourly-bin days, tunable parameters, labels.

All timestamps are user-local epoch seconds (integers). Calendar days are
handled as integer day numbers (days since 1970-01-01, negative values
allowed) so that arithmetic stays exact and vectorisable; conversion to
``datetime.date`` happens only at the edges.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400
HOURS_PER_DAY = 24

_EPOCH_DATE = dt.date(1970, 1, 1)
_EPOCH_WEEKDAY = 3  # 1970-01-01 was a Thursday; Monday == 0


class HowdeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HowdeError):
    """Invalid parameter or configuration value."""


class IngestionError(HowdeError):
    """Malformed or inconsistent input data."""


class OverlappingStopsError(IngestionError):
    """Two stops of the same user overlap in time."""


class Scope(Enum):
    HOME = "home"
    WORK = "work"


class WindowMode(Enum):
    CENTERED = "centered"
    PAST_ONLY = "past_only"
    FULL_PERIOD = "full_period"


class UndetectedReason(Enum):
    DAY_COVERAGE = "DAY_COVERAGE"
    WINDOW_COVERAGE = "WINDOW_COVERAGE"
    NO_CANDIDATE = "NO_CANDIDATE"
    NON_BUSINESS_DAY = "NON_BUSINESS_DAY"


def day_number(d: dt.date) -> int:
    """Days since 1970-01-01 (negative before the epoch)."""
    return (d - _EPOCH_DATE).days


def date_of(day: int) -> dt.date:
    return _EPOCH_DATE + dt.timedelta(days=int(day))


def weekday_of(day: int) -> int:
    """Weekday of an integer day number, Monday == 0."""
    return (int(day) + _EPOCH_WEEKDAY) % 7


@dataclass(frozen=True)
class StopRecord:
    """One contiguous stay of one user at one location.

    ``start`` is inclusive, ``end`` exclusive, both in user-local epoch
    seconds. Stops of a single user may touch but never overlap.
    """

    user_id: str
    loc_id: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise IngestionError(
                f"stop for user {self.user_id!r} at {self.loc_id!r} has "
                f"end <= start ({self.end} <= {self.start})"
            )

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class TimeWindows:
    """Hour-of-day bin sets and business weekdays used by the detectors.

    Defaults follow the empirical visit peaks: night hours [00:00, 06:00)
    every day for home, business hours [09:00, 16:00) on Monday-Friday
    for work.
    """

    night_bins: frozenset = frozenset(range(0, 6))
    business_bins: frozenset = frozenset(range(9, 16))
    business_days: frozenset = frozenset(range(0, 5))

    def __post_init__(self) -> None:
        for name, bins in (("night_bins", self.night_bins),
                           ("business_bins", self.business_bins)):
            if not bins or not all(isinstance(b, int) and 0 <= b <= 23 for b in bins):
                raise ConfigError(f"{name} must be a non-empty subset of 0..23")
        if not self.business_days or not all(
                isinstance(d, int) and 0 <= d <= 6 for d in self.business_days):
            raise ConfigError("business_days must be a non-empty subset of 0..6 (Mon=0)")

    def bins_for(self, scope: Scope) -> frozenset:
        return self.night_bins if scope is Scope.HOME else self.business_bins

    def is_business_day(self, day: int) -> bool:
        return weekday_of(day) in self.business_days


@dataclass(frozen=True)
class HowdeParams:
    """The eight tunable detection parameters plus window and time settings.

    delta_T_H, delta_T_W
        Memory window sizes in days for home and work detection.
    C_hours
        Minimum fraction of night/business hourly bins with data for a day
        to enter the detection process.
    C_days_H, C_days_W
        Minimum fraction of days with data inside a window.
    f_hours_H, f_hours_W
        Minimum average fraction of night/business hourly bins a location
        must be visited to qualify as a candidate.
    f_days_W
        Minimum fraction of days (with data) a work candidate must be
        visited within the window.
    """

    delta_T_H: int = 28
    delta_T_W: int = 28
    C_hours: float = 0.40
    C_days_H: float = 0.5
    C_days_W: float = 0.5
    f_hours_H: float = 0.5
    f_hours_W: float = 0.4
    f_days_W: float = 0.5
    window_mode: WindowMode = WindowMode.CENTERED
    windows: TimeWindows = field(default_factory=TimeWindows)

    def __post_init__(self) -> None:
        for name in ("C_hours", "C_days_H", "C_days_W",
                     "f_hours_H", "f_hours_W", "f_days_W"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value!r}")
        for name in ("delta_T_H", "delta_T_W"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
            if self.window_mode is WindowMode.CENTERED and value % 2 != 0:
                raise ConfigError(
                    f"{name}={value} is odd; centered windows need an even size "
                    "(use past_only mode or an even value)"
                )
        if not isinstance(self.window_mode, WindowMode):
            raise ConfigError(f"invalid window_mode {self.window_mode!r}")

    def delta_for(self, scope: Scope) -> int:
        return self.delta_T_H if scope is Scope.HOME else self.delta_T_W

    def c_days_for(self, scope: Scope) -> float:
        return self.C_days_H if scope is Scope.HOME else self.C_days_W


@dataclass(frozen=True)
class HourlyDay:
    """One user-day as 24 hourly slots, each the dominant location or None."""

    user_id: str
    date: dt.date
    slots: tuple

    def __post_init__(self) -> None:
        if len(self.slots) != HOURS_PER_DAY:
            raise ValueError(f"expected 24 slots, got {len(self.slots)}")


@dataclass(frozen=True)
class DayFeature:
    """Per user-day, per-location occupancy of one scope's hourly bins.

    ``loc_bins`` counts the scope bins occupied by each location;
    ``bins_with_data`` is their total. Fractions are exposed through
    :attr:`frac_by_loc` with ``bins_with_data`` as denominator.
    """

    user_id: str
    date: dt.date
    scope: Scope
    bins_with_data: int
    loc_bins: Mapping[str, int]
    coverage_ok: bool

    @property
    def frac_by_loc(self) -> dict:
        if self.bins_with_data == 0:
            return {}
        return {loc: n / self.bins_with_data for loc, n in self.loc_bins.items()}


@dataclass(frozen=True)
class DetectionLabel:
    """Per user-day output: a home and a work location, or a reason each."""

    user_id: str
    date: dt.date
    home_loc: str | None
    home_reason: UndetectedReason | None
    work_loc: str | None
    work_reason: UndetectedReason | None

    def __post_init__(self) -> None:
        if (self.home_loc is None) == (self.home_reason is None):
            raise ValueError("exactly one of home_loc/home_reason must be set")
        if (self.work_loc is None) == (self.work_reason is None):
            raise ValueError("exactly one of work_loc/work_reason must be set")

    @property
    def home_detected(self) -> bool:
        return self.home_loc is not None

    @property
    def work_detected(self) -> bool:
        return self.work_loc is not None

    @property
    def home_status(self) -> str:
        return "DETECTED" if self.home_loc is not None else self.home_reason.value

    @property
    def work_status(self) -> str:
        return "DETECTED" if self.work_loc is not None else self.work_reason.value
