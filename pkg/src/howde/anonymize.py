"""Privacy-preserving transformation of stop sequences.

Three steps: timestamps are floored to a 10-minute grid, each user's
timeline is shifted by whole weeks so their first activity falls in ISO
week 1970-W01 (keeping weekday and time of day), and within every ISO
week the weekday dates are permuted among weekdays and weekend dates
among weekends, deterministically per seed.
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from .model import SECONDS_PER_DAY, StopRecord

logger = logging.getLogger(__name__)

GRID_SECONDS = 600


def anonymize_frame(stops: pd.DataFrame, seed: int = 0) -> pd.DataFrame:
    """Anonymize a stops table (columns user_id, loc_id, start, end).

    Stops are moved whole, keyed by the date their (floored) start falls
    on; stops shorter than the 10-minute grid may collapse and are dropped.
    Deterministic for a fixed seed regardless of input row order.
    """
    df = stops.copy()
    df["start"] = (df["start"] // GRID_SECONDS) * GRID_SECONDS
    df["end"] = (df["end"] // GRID_SECONDS) * GRID_SECONDS
    collapsed = int((df["end"] <= df["start"]).sum())
    if collapsed:
        logger.warning("anonymize: dropped %d stops collapsed by 10-minute flooring",
                       collapsed)
        df = df[df["end"] > df["start"]]
    df = df.sort_values(["user_id", "start"], kind="stable").reset_index(drop=True)

    users = np.asarray(df["user_id"].astype(str))
    starts = df["start"].to_numpy(dtype=np.int64, copy=True)
    ends = df["end"].to_numpy(dtype=np.int64, copy=True)

    unique_users, user_idx = np.unique(users, return_inverse=True)
    first_start = np.full(unique_users.size, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first_start, user_idx, starts)

    # whole-week shift landing the first activity inside ISO 1970-W01
    # (Mon 1969-12-29 .. Sun 1970-01-04), preserving weekday and time of day
    first_day = np.floor_divide(first_start, SECONDS_PER_DAY)
    target_day = (first_day + 3) % 7 - 3
    shift = (first_day - target_day) * SECONDS_PER_DAY
    starts -= shift[user_idx]
    ends -= shift[user_idx]

    day = np.floor_divide(starts, SECONDS_PER_DAY)
    wd = (day + 3) % 7
    monday = day - wd

    user_first_monday = np.full(unique_users.size, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(user_first_monday, user_idx, monday)
    week_idx = (monday - user_first_monday[user_idx]) // 7

    new_day = np.empty_like(day)
    group_key = user_idx * (week_idx.max() + 1 if week_idx.size else 1) + week_idx
    order = np.argsort(group_key, kind="stable")
    boundaries = np.flatnonzero(np.diff(group_key[order])) + 1
    for rows in np.split(order, boundaries):
        u = int(user_idx[rows[0]])
        w = int(week_idx[rows[0]])
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, u, w)))
        perm_wk = rng.permutation(5)
        perm_we = rng.permutation(2)
        rwd = wd[rows]
        base = monday[rows]
        new_day[rows] = np.where(rwd < 5, base + perm_wk[np.minimum(rwd, 4)],
                                 base + 5 + perm_we[np.maximum(rwd - 5, 0)])

    delta = (new_day - day) * SECONDS_PER_DAY
    starts += delta
    ends += delta

    out = df.copy()
    out["start"] = starts
    out["end"] = ends
    return out.sort_values(["user_id", "start"], kind="stable").reset_index(drop=True)


def anonymize(stops, seed: int = 0) -> list:
    """Anonymize a list of :class:`StopRecord`."""
    stops = list(stops)
    if not stops:
        return []
    df = pd.DataFrame({
        "user_id": [s.user_id for s in stops],
        "loc_id": [s.loc_id for s in stops],
        "start": [s.start for s in stops],
        "end": [s.end for s in stops],
    })
    out = anonymize_frame(df, seed=seed)
    return [StopRecord(r.user_id, r.loc_id, int(r.start), int(r.end))
            for r in out.itertuples(index=False)]
