"""Naive per-anchor reference detector.

Recomputes every window from scratch through the object-level operations,
with no incremental state. Slow but simple; serves as the correctness
oracle for the vectorised engine, which must match it bit-exactly.
"""

from __future__ import annotations

import datetime as dt

from .binning import bin_hours, day_features
from .detector import build_window, detect_home, detect_work
from .model import (
    DetectionLabel,
    HowdeParams,
    Scope,
    UndetectedReason,
    day_number,
    weekday_of,
)


def run_howde_reference(stops, params: HowdeParams | None = None) -> list:
    """Per-day labels for one user, one fresh window per anchor date."""
    params = params or HowdeParams()
    stops = list(stops)
    if not stops:
        return []
    user_id = stops[0].user_id

    days = bin_hours(stops)
    home_features = day_features(days, Scope.HOME, params)
    work_features = day_features(days, Scope.WORK, params)
    home_cov = {f.date for f in home_features if f.coverage_ok}
    work_cov = {f.date for f in work_features if f.coverage_ok}

    first = min(d.date for d in days)
    last = max(d.date for d in days)
    period = (first, last)

    labels = []
    anchor = first
    while anchor <= last:
        if anchor not in home_cov:
            home = (None, UndetectedReason.DAY_COVERAGE)
        else:
            agg = build_window(home_features, anchor, params, period=period)
            home = detect_home(agg, params)

        if weekday_of(day_number(anchor)) not in params.windows.business_days:
            work = (None, UndetectedReason.NON_BUSINESS_DAY)
        elif anchor not in work_cov:
            work = (None, UndetectedReason.DAY_COVERAGE)
        else:
            agg = build_window(work_features, anchor, params, period=period)
            work = detect_work(agg, params)

        labels.append(DetectionLabel(
            user_id=user_id, date=anchor,
            home_loc=home[0], home_reason=home[1],
            work_loc=work[0], work_reason=work[1],
        ))
        anchor += dt.timedelta(days=1)
    return labels
