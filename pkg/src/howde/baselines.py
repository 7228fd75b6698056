"""Atlas and TimeGeo heuristics under the shared evaluation protocol.

Atlas ranks locations by cumulative dwell time (home: nighttime window,
work: weekday daytime); TimeGeo ranks by visit counts and additionally
requires work candidates to lie more than 500 m from home and to be
visited at least three times. Both emit one static label per user.

Each method's native time windows are the default; pass ``harmonized=True``
to use the shared night/business bins while keeping the weekday/weekend
structure of the original definitions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .apps import haversine
from .binning import hour_contributions
from .model import HOURS_PER_DAY, Scope, TimeWindows, weekday_of

logger = logging.getLogger(__name__)

TIMEGEO_MIN_STOPS = 50
TIMEGEO_MIN_HOME_STAYS = 10
TIMEGEO_MIN_WORK_VISITS = 3
TIMEGEO_MIN_WORK_DISTANCE_KM = 0.5


@dataclass(frozen=True)
class BaselineResult:
    """Static per-user output of a baseline method."""

    user_id: str
    home: str | None
    work: str | None
    qualifies: bool


def _week_mask(hour_pred) -> np.ndarray:
    """168-slot weekly mask from a (weekday, hour) predicate."""
    mask = np.zeros(7 * HOURS_PER_DAY, dtype=bool)
    for d in range(7):
        for h in range(HOURS_PER_DAY):
            mask[d * HOURS_PER_DAY + h] = bool(hour_pred(d, h))
    return mask


def atlas_home_mask(windows: TimeWindows | None = None) -> np.ndarray:
    """Nighttime window: native 22:00-06:00, harmonized = shared night bins."""
    if windows is None:
        return _week_mask(lambda d, h: h >= 22 or h < 6)
    return _week_mask(lambda d, h: h in windows.night_bins)


def atlas_work_mask(windows: TimeWindows | None = None) -> np.ndarray:
    windows = windows or TimeWindows()
    return _week_mask(lambda d, h: d in windows.business_days and h in windows.business_bins)


def timegeo_home_mask(windows: TimeWindows | None = None) -> np.ndarray:
    """Weekday nights plus weekends.

    Native nights run 19:00-08:00 and are attributed to the day they start,
    so Monday before 08:00 (a night that started on Sunday) is excluded.
    """
    weekend = {5, 6}
    if windows is None:
        def pred(d, h):
            if d in weekend:
                return True
            if h >= 19:
                return True
            return h < 8 and (d - 1) % 7 not in weekend
        return _week_mask(pred)
    return _week_mask(lambda d, h: d in weekend or h in windows.night_bins)


def timegeo_work_mask(windows: TimeWindows | None = None) -> np.ndarray:
    if windows is None:
        return _week_mask(lambda d, h: d < 5 and 8 <= h < 19)
    return _week_mask(lambda d, h: d in windows.business_days and h in windows.business_bins)


def _slot_of(hours: np.ndarray) -> np.ndarray:
    days = np.floor_divide(hours, HOURS_PER_DAY)
    hod = hours - days * HOURS_PER_DAY
    return ((days + 3) % 7) * HOURS_PER_DAY + hod


def _dwell_by_loc(stops, mask: np.ndarray) -> dict:
    """Cumulative dwell seconds per location inside a weekly hour mask."""
    stops = list(stops)
    if not stops:
        return {}
    starts = np.array([s.start for s in stops], dtype=np.int64)
    ends = np.array([s.end for s in stops], dtype=np.int64)
    stop_idx, hours, dwell = hour_contributions(starts, ends)
    keep = mask[_slot_of(hours)]
    totals: dict = {}
    for i, w in zip(stop_idx[keep], dwell[keep]):
        loc = stops[int(i)].loc_id
        totals[loc] = totals.get(loc, 0) + int(w)
    return totals


def _visits_by_loc(stops, mask: np.ndarray) -> dict:
    """Number of stops per location intersecting a weekly hour mask."""
    stops = list(stops)
    if not stops:
        return {}
    starts = np.array([s.start for s in stops], dtype=np.int64)
    ends = np.array([s.end for s in stops], dtype=np.int64)
    stop_idx, hours, _ = hour_contributions(starts, ends)
    keep = mask[_slot_of(hours)]
    visiting = np.unique(stop_idx[keep])
    counts: dict = {}
    for i in visiting:
        loc = stops[int(i)].loc_id
        counts[loc] = counts.get(loc, 0) + 1
    return counts


def _argmax(scores: dict) -> str | None:
    if not scores:
        return None
    return min(scores, key=lambda loc: (-scores[loc], loc))


def atlas_home(stops, windows: TimeWindows | None = None,
               harmonized: bool = False) -> str | None:
    """Location with maximal nighttime dwell over the whole period."""
    mask = atlas_home_mask((windows or TimeWindows()) if harmonized else None)
    return _argmax(_dwell_by_loc(stops, mask))


def atlas_work(stops, windows: TimeWindows | None = None,
               harmonized: bool = False) -> str | None:
    """Location with maximal weekday-daytime dwell over the whole period."""
    mask = atlas_work_mask((windows or TimeWindows()) if harmonized else None)
    return _argmax(_dwell_by_loc(stops, mask))


def timegeo_home(stops, windows: TimeWindows | None = None,
                 harmonized: bool = False) -> str | None:
    """Most-visited location during weekday nights and weekends.

    Users with fewer than 50 stops, or whose top night location has fewer
    than 10 stays, are filtered out.
    """
    stops = list(stops)
    if len(stops) < TIMEGEO_MIN_STOPS:
        return None
    mask = timegeo_home_mask((windows or TimeWindows()) if harmonized else None)
    counts = _visits_by_loc(stops, mask)
    best = _argmax(counts)
    if best is None or counts[best] < TIMEGEO_MIN_HOME_STAYS:
        return None
    return best


def timegeo_work(stops, home: str | None, coords,
                 windows: TimeWindows | None = None,
                 harmonized: bool = False) -> str | None:
    """Most-visited weekday-daytime location at least 500 m from home.

    ``coords`` maps loc_id to an object with lat/lon. Candidates without
    coordinates (or when home coordinates are missing) are skipped with a
    warning.
    """
    stops = list(stops)
    if home is None:
        return None
    mask = timegeo_work_mask((windows or TimeWindows()) if harmonized else None)
    counts = _visits_by_loc(stops, mask)
    home_coord = coords.get(home) if coords else None
    scores: dict = {}
    for loc, n in counts.items():
        if n < TIMEGEO_MIN_WORK_VISITS:
            continue
        coord = coords.get(loc) if coords else None
        if coord is None or home_coord is None:
            logger.warning("timegeo_work: missing coordinates for %r, candidate skipped", loc)
            continue
        if haversine(home_coord, coord) > TIMEGEO_MIN_WORK_DISTANCE_KM:
            scores[loc] = n
    return _argmax(scores)


def run_baseline(stops, method: str, coords=None,
                 windows: TimeWindows | None = None,
                 harmonized: bool = False) -> BaselineResult:
    """One user's static home/work labels under ``method`` (atlas|timegeo)."""
    stops = list(stops)
    user_id = stops[0].user_id if stops else ""
    if method == "atlas":
        home = atlas_home(stops, windows, harmonized)
        work = atlas_work(stops, windows, harmonized)
        return BaselineResult(user_id, home, work, qualifies=home is not None)
    if method == "timegeo":
        home = timegeo_home(stops, windows, harmonized)
        work = timegeo_work(stops, home, coords, windows, harmonized)
        return BaselineResult(user_id, home, work, qualifies=home is not None)
    raise ValueError(f"unknown baseline method {method!r}")
