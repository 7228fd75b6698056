"""Downstream applications: employment-rate estimation and commuting distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class LocationCoords:
    loc_id: str
    lat: float
    lon: float
    region_id: str | None = None

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ConfigError(f"latitude out of range for {self.loc_id!r}: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ConfigError(f"longitude out of range for {self.loc_id!r}: {self.lon}")


def haversine(a, b) -> float:
    """Great-circle distance in km between two points with lat/lon degrees."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class RegionEmployment:
    region_id: str
    rate: float
    n_users: int
    n_employed: int


@dataclass(frozen=True)
class EmploymentReport:
    by_region: dict
    n_users_without_region: int


def _has_stable_span(entries, min_stable_days: int) -> bool:
    """True if some constant-location run of detections spans enough days.

    ``entries`` are (date, loc) pairs of detected days in date order.
    Undetected days between detections do not break a run; a different
    detected location does.
    """
    run_loc = None
    run_start = None
    run_end = None
    for date, loc in entries:
        if loc != run_loc:
            run_loc, run_start = loc, date
        run_end = date
        if (run_end - run_start).days + 1 >= min_stable_days:
            return True
    return False


def employment_rate(labels, region_by_user, min_stable_days: int = 30,
                    min_users: int = 0) -> EmploymentReport:
    """Per-region fraction of users with a stable detected work location.

    A user counts as employed if their detected work labels hold one
    location over a calendar span of at least ``min_stable_days`` days,
    detections on both endpoints. Users missing from ``region_by_user``
    are excluded and counted.
    """
    by_user: dict = {}
    for label in labels:
        if label.work_detected:
            by_user.setdefault(label.user_id, []).append((label.date, label.work_loc))
        else:
            by_user.setdefault(label.user_id, [])

    users_in_region: dict = {}
    employed: dict = {}
    no_region = 0
    for user_id, entries in by_user.items():
        region = region_by_user.get(user_id)
        if region is None:
            no_region += 1
            continue
        users_in_region[region] = users_in_region.get(region, 0) + 1
        entries.sort(key=lambda e: e[0])
        if _has_stable_span(entries, min_stable_days):
            employed[region] = employed.get(region, 0) + 1

    by_region = {}
    for region in sorted(users_in_region):
        n = users_in_region[region]
        if n < min_users:
            continue
        e = employed.get(region, 0)
        by_region[region] = RegionEmployment(region, e / n, n, e)
    return EmploymentReport(by_region=by_region, n_users_without_region=no_region)


@dataclass(frozen=True)
class GroupCommute:
    group_id: str
    mean_km: float
    stderr_km: float
    n_users: int


@dataclass(frozen=True)
class CommuteReport:
    by_group: dict
    n_days_skipped: int


def commute_stats(labels, coords, group_by_user) -> CommuteReport:
    """Per-group mean home-work distance with standard errors.

    Only days with both home and work detected contribute; per-day
    distances are averaged per user first. Days with missing coordinates
    are skipped and counted.
    """
    per_user: dict = {}
    skipped = 0
    for label in labels:
        if not (label.home_detected and label.work_detected):
            continue
        a = coords.get(label.home_loc)
        b = coords.get(label.work_loc)
        if a is None or b is None:
            skipped += 1
            continue
        per_user.setdefault(label.user_id, []).append(haversine(a, b))

    by_group_values: dict = {}
    for user_id, dists in per_user.items():
        group = group_by_user.get(user_id)
        if group is None:
            continue
        by_group_values.setdefault(group, []).append(float(np.mean(dists)))

    by_group = {}
    for group in sorted(by_group_values):
        values = np.asarray(by_group_values[group])
        stderr = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else float("nan")
        by_group[group] = GroupCommute(group, float(values.mean()), stderr, int(values.size))
    return CommuteReport(by_group=by_group, n_days_skipped=skipped)


@dataclass(frozen=True)
class ComparisonResult:
    pearson_r: float
    mean_relative_error: float
    n_overlap: int
    n_zero_reference_excluded: int


def compare_to_reference(estimates, reference) -> ComparisonResult:
    """Pearson correlation and mean relative error against reference values.

    Regions with reference value 0 are excluded from the relative error
    and counted. Requires at least two overlapping regions.
    """
    common = sorted(set(estimates) & set(reference))
    if len(common) < 2:
        raise ValueError("need at least two overlapping regions to compare")
    est = np.array([estimates[r] for r in common], dtype=float)
    ref = np.array([reference[r] for r in common], dtype=float)
    r = float(np.corrcoef(est, ref)[0, 1])
    nonzero = ref != 0
    excluded = int((~nonzero).sum())
    if nonzero.any():
        mre = float(np.mean(np.abs(est[nonzero] - ref[nonzero]) / ref[nonzero]))
    else:
        mre = float("nan")
    return ComparisonResult(r, mre, len(common), excluded)
