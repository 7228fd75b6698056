"""CSV interchange formats and their validation.

Stops: ``user_id,loc_id,start,end[,utc_offset_minutes]`` with timestamps
as UNIX seconds or ISO-8601 local time (both may appear in one file).
Labels: ``user_id,date,home_loc,home_status,work_loc,work_status``.
Ground truth: ``user_id,scope,granularity,week,locs``.
Coordinates: ``loc_id,lat,lon[,region_id]``.
"""

from __future__ import annotations

import datetime as dt

import numpy as np
import pandas as pd

from .apps import LocationCoords
from .metrics import Granularity, GroundTruth
from .model import (
    DetectionLabel,
    IngestionError,
    OverlappingStopsError,
    Scope,
    StopRecord,
    UndetectedReason,
)

STOP_COLUMNS = ("user_id", "loc_id", "start", "end")
LABEL_COLUMNS = ("user_id", "date", "home_loc", "home_status",
                 "work_loc", "work_status")
BASELINE_COLUMNS = ("user_id", "home_loc", "work_loc", "qualifies")
TRUTH_COLUMNS = ("user_id", "scope", "granularity", "week", "locs")

_STATUS_VALUES = ("DETECTED",) + tuple(r.value for r in UndetectedReason)


def _format_lines(lines) -> str:
    shown = ", ".join(str(int(x)) for x in lines[:5])
    more = "" if len(lines) <= 5 else f" (+{len(lines) - 5} more)"
    return shown + more


def _parse_time_column(values: pd.Series, name: str, lines: np.ndarray) -> np.ndarray:
    """Epoch seconds from a column mixing UNIX seconds and ISO-8601 strings."""
    numeric = pd.to_numeric(values, errors="coerce")
    out = np.zeros(len(values), dtype=np.int64)
    is_num = numeric.notna().to_numpy()
    out[is_num] = np.floor(numeric.to_numpy(dtype=np.float64, na_value=np.nan)[is_num]).astype(np.int64)
    if not is_num.all():
        rest = values[~is_num]
        parsed = pd.to_datetime(rest, errors="coerce", format="mixed")
        bad = parsed.isna().to_numpy()
        if bad.any():
            where = lines[~is_num][bad]
            raise IngestionError(
                f"column {name!r}: unparseable timestamps at lines {_format_lines(where)}")
        out[~is_num] = (parsed.astype("int64") // 1_000_000_000).to_numpy()
    return out


def read_stops(path) -> pd.DataFrame:
    """Read and validate a stops CSV.

    Returns a frame with columns user_id, loc_id (strings), start, end
    (int64 local epoch seconds), sorted by (user_id, start). An optional
    utc_offset_minutes column shifts timestamps into local time. Rows with
    end <= start and overlapping stops are rejected with line numbers.
    """
    df = pd.read_csv(path, dtype={"user_id": str, "loc_id": str})
    return normalize_stops(df, source=str(path))


def normalize_stops(df: pd.DataFrame, source: str = "stops table") -> pd.DataFrame:
    """Validate and canonicalise a raw stops table (the read_stops core)."""
    missing = set(STOP_COLUMNS) - set(df.columns)
    if missing:
        raise IngestionError(f"{source}: missing columns {sorted(missing)}")
    lines = np.arange(2, len(df) + 2, dtype=np.int64)  # header is line 1

    start = _parse_time_column(df["start"], "start", lines)
    end = _parse_time_column(df["end"], "end", lines)
    if "utc_offset_minutes" in df.columns:
        offset = pd.to_numeric(df["utc_offset_minutes"], errors="coerce").fillna(0)
        offset = (offset.to_numpy(dtype=np.float64) * 60).astype(np.int64)
        start = start + offset
        end = end + offset

    null_ids = df["user_id"].isna() | df["loc_id"].isna()
    if null_ids.any():
        raise IngestionError(
            f"empty user_id/loc_id at lines {_format_lines(lines[null_ids.to_numpy()])}")

    bad = end <= start
    if bad.any():
        raise IngestionError(
            f"stops with end <= start at lines {_format_lines(lines[bad])}")

    out = pd.DataFrame({
        "user_id": df["user_id"].astype(str),
        "loc_id": df["loc_id"].astype(str),
        "start": start,
        "end": end,
    })
    order = np.lexsort((out["start"].to_numpy(), out["user_id"].to_numpy()))
    out = out.iloc[order].reset_index(drop=True)
    lines = lines[order]

    users = out["user_id"].to_numpy()
    starts = out["start"].to_numpy()
    ends = out["end"].to_numpy()
    same_user = users[1:] == users[:-1]
    overlap = same_user & (starts[1:] < ends[:-1])
    if overlap.any():
        i = int(np.flatnonzero(overlap)[0])
        raise OverlappingStopsError(
            f"user {users[i]!r}: stop at line {int(lines[i + 1])} (start {int(starts[i + 1])}) "
            f"overlaps stop at line {int(lines[i])} (end {int(ends[i])})")
    return out


def write_stops(stops, path) -> None:
    """Write stops (DataFrame or StopRecord iterable) as CSV."""
    if not isinstance(stops, pd.DataFrame):
        stops = stops_frame(stops)
    stops.to_csv(path, index=False, columns=list(STOP_COLUMNS), lineterminator="\n")


def stops_frame(records) -> pd.DataFrame:
    records = list(records)
    return pd.DataFrame({
        "user_id": [s.user_id for s in records],
        "loc_id": [s.loc_id for s in records],
        "start": np.array([s.start for s in records], dtype=np.int64),
        "end": np.array([s.end for s in records], dtype=np.int64),
    })


def stop_records(df: pd.DataFrame) -> list:
    return [StopRecord(str(r.user_id), str(r.loc_id), int(r.start), int(r.end))
            for r in df.itertuples(index=False)]


def labels_frame(labels) -> pd.DataFrame:
    """DataFrame in the labels CSV schema from DetectionLabel objects."""
    rows = sorted(labels, key=lambda l: (l.user_id, l.date))
    return pd.DataFrame({
        "user_id": [l.user_id for l in rows],
        "date": [l.date.isoformat() for l in rows],
        "home_loc": [l.home_loc or "" for l in rows],
        "home_status": [l.home_status for l in rows],
        "work_loc": [l.work_loc or "" for l in rows],
        "work_status": [l.work_status for l in rows],
    })


def write_labels(labels, path) -> None:
    """Write detection labels (DataFrame or DetectionLabel iterable)."""
    if not isinstance(labels, pd.DataFrame):
        labels = labels_frame(labels)
    labels.to_csv(path, index=False, columns=list(LABEL_COLUMNS), lineterminator="\n")


def read_labels(path) -> pd.DataFrame:
    """Read a labels CSV (daily detector output)."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = set(LABEL_COLUMNS) - set(df.columns)
    if missing:
        raise IngestionError(f"{path}: missing columns {sorted(missing)}")
    bad = ~df["home_status"].isin(_STATUS_VALUES) | ~df["work_status"].isin(_STATUS_VALUES)
    if bad.any():
        raise IngestionError(f"{path}: invalid status values in {int(bad.sum())} rows")
    return df


def detection_labels(df: pd.DataFrame) -> list:
    """DetectionLabel objects from a labels frame."""
    out = []
    reasons = {r.value: r for r in UndetectedReason}
    for r in df.itertuples(index=False):
        home_det = r.home_status == "DETECTED"
        work_det = r.work_status == "DETECTED"
        out.append(DetectionLabel(
            user_id=str(r.user_id),
            date=dt.date.fromisoformat(str(r.date)),
            home_loc=str(r.home_loc) if home_det else None,
            home_reason=None if home_det else reasons[r.home_status],
            work_loc=str(r.work_loc) if work_det else None,
            work_reason=None if work_det else reasons[r.work_status],
        ))
    return out


def _week_str(week) -> str:
    return f"{week[0]:04d}-W{week[1]:02d}"


def _parse_week(text: str) -> tuple:
    year, week = str(text).split("-W")
    return int(year), int(week)


def truth_frame(truths) -> pd.DataFrame:
    """GroundTruth tables (iterable) as one truth-CSV-schema frame."""
    rows = []
    for truth in truths:
        for key in sorted(truth.entries):
            locs = ";".join(sorted(truth.entries[key]))
            if truth.granularity is Granularity.USER_WEEK:
                user, week = key
                rows.append((user, truth.scope.value, truth.granularity.value,
                             _week_str(week), locs))
            else:
                rows.append((key, truth.scope.value, truth.granularity.value, "", locs))
    return pd.DataFrame(rows, columns=list(TRUTH_COLUMNS))


def write_truth(truths, path) -> None:
    """Write GroundTruth tables (iterable) into one CSV."""
    truth_frame(truths).to_csv(path, index=False, lineterminator="\n")


def truth_from_frame(df: pd.DataFrame, scope: Scope,
                     granularity: Granularity, source: str = "truth table") -> GroundTruth:
    """Extract one scope and granularity from a truth-schema frame."""
    missing = set(TRUTH_COLUMNS) - set(df.columns)
    if missing:
        raise IngestionError(f"{source}: missing columns {sorted(missing)}")
    sel = df[(df["scope"] == scope.value) & (df["granularity"] == granularity.value)]
    entries: dict = {}
    for r in sel.itertuples(index=False):
        locs = frozenset(x for x in str(r.locs).split(";") if x)
        if not locs:
            raise IngestionError(f"{source}: ground truth row without locations for {r.user_id}")
        if granularity is Granularity.USER_WEEK:
            entries[(str(r.user_id), _parse_week(r.week))] = locs
        else:
            entries[str(r.user_id)] = locs
    return GroundTruth(scope=scope, granularity=granularity, entries=entries)


def read_truth(path, scope: Scope, granularity: Granularity) -> GroundTruth:
    """Read the ground-truth entries for one scope and granularity."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    return truth_from_frame(df, scope, granularity, source=str(path))


def coords_frame(coords) -> pd.DataFrame:
    rows = [(c.loc_id, c.lat, c.lon, c.region_id or "")
            for c in (coords.values() if isinstance(coords, dict) else coords)]
    rows.sort()
    return pd.DataFrame(rows, columns=["loc_id", "lat", "lon", "region_id"])


def write_coords(coords, path) -> None:
    coords_frame(coords).to_csv(path, index=False, lineterminator="\n")


def read_coords(path) -> dict:
    """Coordinates CSV into {loc_id: LocationCoords}."""
    df = pd.read_csv(path, dtype={"loc_id": str, "region_id": str})
    missing = {"loc_id", "lat", "lon"} - set(df.columns)
    if missing:
        raise IngestionError(f"{path}: missing columns {sorted(missing)}")
    out = {}
    has_region = "region_id" in df.columns
    for r in df.itertuples(index=False):
        region = (str(r.region_id) if has_region and pd.notna(r.region_id)
                  and str(r.region_id) else None)
        out[str(r.loc_id)] = LocationCoords(str(r.loc_id), float(r.lat),
                                            float(r.lon), region)
    return out


def read_user_map(path, value_column: str) -> dict:
    """Two-column user map CSV (user_id plus e.g. region_id or group_id)."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = {"user_id", value_column} - set(df.columns)
    if missing:
        raise IngestionError(f"{path}: missing columns {sorted(missing)}")
    return {str(r.user_id): str(getattr(r, value_column))
            for r in df.itertuples(index=False)}


def read_reference(path) -> dict:
    """Reference statistics CSV (region_id,value) into a dict."""
    df = pd.read_csv(path, dtype={"region_id": str})
    missing = {"region_id", "value"} - set(df.columns)
    if missing:
        raise IngestionError(f"{path}: missing columns {sorted(missing)}")
    return {str(r.region_id): float(r.value) for r in df.itertuples(index=False)}
