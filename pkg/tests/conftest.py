"""Shared builders for stop fixtures."""

from __future__ import annotations

import datetime as dt

import pytest

from howde.model import StopRecord, day_number

# Monday 2019-01-07
BASE_DAY = day_number(dt.date(2019, 1, 7))


def ts(day: int, hour: float = 0.0) -> int:
    """Epoch seconds for (day number, fractional hour)."""
    return int(day * 86400 + round(hour * 3600))


def stop(user: str, loc: str, day: int, h0: float, h1: float) -> StopRecord:
    """A stop inside one day, hours may be fractional."""
    return StopRecord(user, loc, ts(day, h0), ts(day, h1))


def commuter_stops(user: str, home: str, work: str, first_day: int, n_days: int,
                   leisure: str | None = None) -> list:
    """Plain commuter: home nights, work business hours, weekends at home."""
    out = []
    for d in range(first_day, first_day + n_days):
        weekday = (d + 3) % 7
        out.append(stop(user, home, d, 0, 8))
        if weekday < 5:
            out.append(stop(user, work, d, 9, 16))
            if leisure:
                out.append(stop(user, leisure, d, 19, 21))
            out.append(stop(user, home, d, 21, 24))
        else:
            out.append(stop(user, home, d, 9, 24))
    return out


@pytest.fixture
def base_day() -> int:
    return BASE_DAY
