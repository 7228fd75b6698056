"""Temporal aggregation of stop sequences into hourly-bin day sequences.

Each hourly bin keeps the location with the largest cumulative dwell inside
that hour; stops spanning hour or day boundaries contribute proportionally
to every bin they intersect. Ties are broken by the lexicographically
smallest location id so results do not depend on input order.
"""

from __future__ import annotations

import numpy as np

from .model import (
    HOURS_PER_DAY,
    SECONDS_PER_HOUR,
    DayFeature,
    HourlyDay,
    HowdeParams,
    OverlappingStopsError,
    Scope,
    StopRecord,
    date_of,
    day_number,
    weekday_of,
)


def check_no_overlap(user_id, starts, ends, lines=None):
    """Validate that stops sorted by start never overlap.

    ``lines`` optionally carries source line numbers for error reporting.
    """
    starts = np.asarray(starts)
    ends = np.asarray(ends)
    if starts.size < 2:
        return
    bad = np.nonzero(starts[1:] < ends[:-1])[0]
    if bad.size:
        i = int(bad[0])
        where = ""
        if lines is not None:
            where = f" (lines {int(lines[i])} and {int(lines[i + 1])})"
        raise OverlappingStopsError(
            f"user {user_id!r}: stop starting at {int(starts[i + 1])} overlaps "
            f"previous stop ending at {int(ends[i])}{where}"
        )


def hour_contributions(starts, ends):
    """Expand stops into per-hour dwell contributions.

    Returns ``(stop_idx, hours, dwell)``: for every (stop, absolute hour bin)
    pair with positive overlap, the stop index, the hour index and the
    overlap in seconds.
    """
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    if starts.size == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()

    first_hour = np.floor_divide(starts, SECONDS_PER_HOUR)
    last_hour = np.floor_divide(ends - 1, SECONDS_PER_HOUR)
    n_bins = (last_hour - first_hour + 1).astype(np.int64)

    total = int(n_bins.sum())
    stop_idx = np.repeat(np.arange(starts.size), n_bins)
    offsets = np.arange(total) - np.repeat(np.cumsum(n_bins) - n_bins, n_bins)
    hours = first_hour[stop_idx] + offsets

    bin_start = hours * SECONDS_PER_HOUR
    dwell = (np.minimum(ends[stop_idx], bin_start + SECONDS_PER_HOUR)
             - np.maximum(starts[stop_idx], bin_start))
    return stop_idx, hours, dwell


def hour_winners(starts, ends, codes):
    """Dominant location per absolute hour bin.

    Parameters
    ----------
    starts, ends : int64 arrays, user-local epoch seconds, end exclusive.
    codes : integer location codes; smaller code must mean lexicographically
        smaller location id for the tie rule to hold.

    Returns
    -------
    (hours, winner_codes) : absolute hour indices (sorted) and the winning
        code per hour. Only hours intersected by at least one stop appear.
    """
    codes = np.asarray(codes, dtype=np.int64)
    stop_idx, hours, dwell = hour_contributions(starts, ends)
    if hours.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    contrib_codes = codes[stop_idx]

    # sum dwell per (hour, code): two stops at the same place may share a bin
    order = np.lexsort((contrib_codes, hours))
    hours = hours[order]
    contrib_codes = contrib_codes[order]
    dwell = dwell[order]
    new_group = np.empty(hours.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = (hours[1:] != hours[:-1]) | (contrib_codes[1:] != contrib_codes[:-1])
    group_starts = np.nonzero(new_group)[0]
    g_hours = hours[group_starts]
    g_codes = contrib_codes[group_starts]
    g_dwell = np.add.reduceat(dwell, group_starts)

    # winner per hour: max dwell, then smallest code
    order = np.lexsort((g_codes, -g_dwell, g_hours))
    g_hours = g_hours[order]
    g_codes = g_codes[order]
    first_of_hour = np.empty(g_hours.size, dtype=bool)
    first_of_hour[0] = True
    first_of_hour[1:] = g_hours[1:] != g_hours[:-1]
    return g_hours[first_of_hour], g_codes[first_of_hour]


def _stops_to_arrays(stops):
    stops = list(stops)
    if not stops:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64), []
    users = {s.user_id for s in stops}
    if len(users) != 1:
        raise ValueError(f"expected stops of a single user, got {sorted(users)}")
    stops = sorted(stops, key=lambda s: s.start)
    starts = np.array([s.start for s in stops], dtype=np.int64)
    ends = np.array([s.end for s in stops], dtype=np.int64)
    vocab = sorted({s.loc_id for s in stops})
    index = {loc: i for i, loc in enumerate(vocab)}
    codes = np.array([index[s.loc_id] for s in stops], dtype=np.int64)
    check_no_overlap(stops[0].user_id, starts, ends)
    return starts, ends, codes, vocab


def bin_hours(stops) -> list:
    """Aggregate one user's stops into :class:`HourlyDay` objects.

    Emits one day per calendar date intersected by at least one stop. A pure
    function of the stop set: input order does not matter.
    """
    stops = list(stops)
    if not stops:
        return []
    user_id = stops[0].user_id
    starts, ends, codes, vocab = _stops_to_arrays(stops)
    hours, winners = hour_winners(starts, ends, codes)
    days = np.floor_divide(hours, HOURS_PER_DAY)
    hod = hours - days * HOURS_PER_DAY

    out = []
    for day in np.unique(days):
        mask = days == day
        slots = [None] * HOURS_PER_DAY
        for h, c in zip(hod[mask], winners[mask]):
            slots[int(h)] = vocab[int(c)]
        out.append(HourlyDay(user_id=user_id, date=date_of(int(day)), slots=tuple(slots)))
    return out


def day_features(days, scope: Scope, params: HowdeParams) -> list:
    """Per-day occupancy fractions of one scope's hourly bins.

    For :attr:`Scope.WORK` only dates falling on business days are emitted.
    ``coverage_ok`` marks days whose fraction of scope bins with data
    reaches ``C_hours``.
    """
    bins = sorted(params.windows.bins_for(scope))
    n_bins = len(bins)
    out = []
    for day in days:
        if scope is Scope.WORK and not params.windows.is_business_day(day_number(day.date)):
            continue
        loc_bins: dict = {}
        for b in bins:
            loc = day.slots[b]
            if loc is not None:
                loc_bins[loc] = loc_bins.get(loc, 0) + 1
        with_data = sum(loc_bins.values())
        coverage_ok = (with_data / n_bins) >= params.C_hours
        out.append(DayFeature(
            user_id=day.user_id,
            date=day.date,
            scope=scope,
            bins_with_data=with_data,
            loc_bins=loc_bins,
            coverage_ok=coverage_ok,
        ))
    return out
