"""Sliding-window home/work detection over day features.

Window aggregation is exact: each day's occupancy fraction n/D is held as
the integer n * (L_SCALE // D) with L_SCALE = lcm(1..24), so sums over any
window are order-independent integers and the average needs one float
division. The incremental engine (:mod:`howde.engine`) and the naive
per-anchor reference (:mod:`howde.reference`) therefore agree bit-exactly.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

from .model import (
    DetectionLabel,
    HowdeParams,
    Scope,
    UndetectedReason,
    WindowMode,
    day_number,
    weekday_of,
)

L_SCALE = math.lcm(*range(1, 25))  # divisible by every possible bins-with-data count


@dataclass(frozen=True)
class WindowAggregate:
    """Visit statistics of one user's scope bins inside one window.

    ``avg_frac_by_loc`` is the mean, over days with data, of the per-day
    fraction of scope bins spent at the location; ``frac_days_visited_by_loc``
    the fraction of days with data on which the location appears at least
    once in scope bins. Both maps contain only locations actually visited.
    """

    user_id: str
    date: dt.date
    scope: Scope
    days_in_window_with_data: int
    window_span_days: int
    avg_frac_by_loc: dict
    frac_days_visited_by_loc: dict


def count_days_with_weekdays(lo: int, hi: int, weekdays) -> int:
    """Number of day numbers in [lo, hi] whose weekday is in ``weekdays``."""
    if hi < lo:
        return 0
    total = 0
    for w in weekdays:
        a = (w - 3) % 7  # day numbers with weekday w are ≡ a (mod 7)
        total += (hi - a) // 7 - (lo - 1 - a) // 7
    return total


def _step_scope_days(day: int, n: int, step: int, business_days) -> int:
    """Walk n scope-relevant days from ``day`` in direction ``step``."""
    while n > 0:
        day += step
        if business_days is None or weekday_of(day) in business_days:
            n -= 1
    return day


def window_range(anchor_day: int, delta: int, mode: WindowMode, scope: Scope,
                 windows, period: tuple | None = None) -> tuple:
    """Inclusive calendar day range of the window anchored at ``anchor_day``.

    Home windows cover delta+1 consecutive calendar days. Work windows
    exclude weekends: they cover delta+1 business days, so their calendar
    range stretches across intervening non-business days.
    """
    business = windows.business_days if scope is Scope.WORK else None
    if mode is WindowMode.CENTERED:
        half = delta // 2
        return (_step_scope_days(anchor_day, half, -1, business),
                _step_scope_days(anchor_day, half, +1, business))
    if mode is WindowMode.PAST_ONLY:
        return _step_scope_days(anchor_day, delta, -1, business), anchor_day
    if mode is WindowMode.FULL_PERIOD:
        if period is None:
            raise ValueError("full_period windows need the observed period")
        return period
    raise ValueError(f"unknown window mode {mode!r}")


def build_window(features, anchor: dt.date, params: HowdeParams,
                 period: tuple | None = None) -> WindowAggregate:
    """Aggregate day features inside the window anchored at ``anchor``.

    Only days with ``coverage_ok`` count as days with data. ``period``
    gives the user's observed (first_date, last_date) and is required for
    full-period windows; when omitted it falls back to the feature extent.
    """
    features = list(features)
    if not features:
        raise ValueError("cannot build a window from an empty feature list")
    scopes = {f.scope for f in features}
    users = {f.user_id for f in features}
    if len(scopes) != 1 or len(users) != 1:
        raise ValueError("features must share one user and one scope")
    scope = scopes.pop()
    user_id = users.pop()

    anchor_day = day_number(anchor)
    if params.window_mode is WindowMode.FULL_PERIOD:
        if period is not None:
            span_range = (day_number(period[0]), day_number(period[1]))
        else:
            days = [day_number(f.date) for f in features]
            span_range = (min(days), max(days))
        lo, hi = span_range
    else:
        lo, hi = window_range(anchor_day, params.delta_for(scope),
                              params.window_mode, scope, params.windows)

    if scope is Scope.WORK:
        span = count_days_with_weekdays(lo, hi, params.windows.business_days)
    else:
        span = hi - lo + 1

    cnt = 0
    sums: dict = {}
    visits: dict = {}
    for f in sorted(features, key=lambda f: f.date):
        d = day_number(f.date)
        if d < lo or d > hi or not f.coverage_ok:
            continue
        cnt += 1
        if f.bins_with_data > 0:
            scale = L_SCALE // f.bins_with_data
            for loc, n in f.loc_bins.items():
                sums[loc] = sums.get(loc, 0) + n * scale
                visits[loc] = visits.get(loc, 0) + 1

    # single division per value; must match the engine's form bit for bit
    denom = cnt * L_SCALE
    avg = {loc: s / denom for loc, s in sums.items()}
    vfrac = {loc: v / cnt for loc, v in visits.items()}
    return WindowAggregate(
        user_id=user_id,
        date=anchor,
        scope=scope,
        days_in_window_with_data=cnt,
        window_span_days=span,
        avg_frac_by_loc=avg,
        frac_days_visited_by_loc=vfrac,
    )


def detect_home(agg: WindowAggregate, params: HowdeParams):
    """Pick a home location from a HOME window aggregate.

    Returns ``(loc_id, None)`` or ``(None, reason)``.
    """
    if agg.scope is not Scope.HOME:
        raise ValueError("detect_home needs a HOME aggregate")
    span = agg.window_span_days
    if span <= 0 or not (agg.days_in_window_with_data / span) >= params.C_days_H:
        return None, UndetectedReason.WINDOW_COVERAGE
    avg = agg.avg_frac_by_loc
    candidates = [loc for loc, a in avg.items() if a >= params.f_hours_H]
    if not candidates:
        return None, UndetectedReason.NO_CANDIDATE
    vfrac = agg.frac_days_visited_by_loc
    best = min(candidates, key=lambda loc: (-avg[loc], -vfrac[loc], loc))
    return best, None


def detect_work(agg: WindowAggregate, params: HowdeParams):
    """Pick a work location from a WORK window aggregate.

    Candidates must clear ``f_hours_W``; those also clearing ``f_days_W``
    are ranked by the fraction of days visited, the rest serve as an
    hours-ranked fallback. Returns ``(loc_id, None)`` or ``(None, reason)``.
    """
    if agg.scope is not Scope.WORK:
        raise ValueError("detect_work needs a WORK aggregate")
    if weekday_of(day_number(agg.date)) not in params.windows.business_days:
        return None, UndetectedReason.NON_BUSINESS_DAY
    span = agg.window_span_days
    if span <= 0 or not (agg.days_in_window_with_data / span) >= params.C_days_W:
        return None, UndetectedReason.WINDOW_COVERAGE
    avg = agg.avg_frac_by_loc
    vfrac = agg.frac_days_visited_by_loc
    base = [loc for loc, a in avg.items() if a >= params.f_hours_W]
    if not base:
        return None, UndetectedReason.NO_CANDIDATE
    primary = [loc for loc in base if vfrac[loc] >= params.f_days_W]
    if primary:
        best = min(primary, key=lambda loc: (-vfrac[loc], -avg[loc], loc))
    else:
        best = min(base, key=lambda loc: (-avg[loc], -vfrac[loc], loc))
    return best, None


def run_howde(stops, params: HowdeParams | None = None) -> list:
    """Detect per-day home and work locations for one user's stops.

    Emits one :class:`DetectionLabel` per calendar date in the user's
    observed span (first to last date with any stop, inclusive), so
    downstream joins are total over the date range.
    """
    from . import engine  # deferred: engine imports binning helpers

    params = params or HowdeParams()
    stops = list(stops)
    if not stops:
        return []
    user_id = stops[0].user_id
    result = engine.detect_user_stops(stops, params)
    if result is None:
        return []
    first_day, home_loc, home_reason, work_loc, work_reason, vocab = result
    labels = []
    reasons = list(UndetectedReason)
    for i in range(home_loc.size):
        date = dt.date(1970, 1, 1) + dt.timedelta(days=first_day + i)
        hl = vocab[home_loc[i]] if home_loc[i] >= 0 else None
        hr = None if home_loc[i] >= 0 else reasons[home_reason[i]]
        wl = vocab[work_loc[i]] if work_loc[i] >= 0 else None
        wr = None if work_loc[i] >= 0 else reasons[work_reason[i]]
        labels.append(DetectionLabel(
            user_id=user_id, date=date,
            home_loc=hl, home_reason=hr, work_loc=wl, work_reason=wr,
        ))
    return labels
