"""Vectorised per-user detection pipeline.

Windows are evaluated through integer cumulative sums over a padded day
axis, which is arithmetically identical to recomputing every window from
scratch (integer addition is order-free). Floating point enters exactly
once per quantity, in the same expression the reference detector uses.
"""

from __future__ import annotations

import numpy as np

from .binning import check_no_overlap, hour_winners
from .detector import L_SCALE
from .model import (
    HOURS_PER_DAY,
    HowdeParams,
    Scope,
    UndetectedReason,
    WindowMode,
)

_REASON_INDEX = {r: i for i, r in enumerate(UndetectedReason)}
_DAY_COV = _REASON_INDEX[UndetectedReason.DAY_COVERAGE]
_WIN_COV = _REASON_INDEX[UndetectedReason.WINDOW_COVERAGE]
_NO_CAND = _REASON_INDEX[UndetectedReason.NO_CANDIDATE]
_NON_BIZ = _REASON_INDEX[UndetectedReason.NON_BUSINESS_DAY]


def _rank_two_keys(primary, secondary, eligible):
    """Per-row argmax by (primary, secondary, lowest column) over eligible cells."""
    pq = np.where(eligible, primary, -1.0)
    best_p = pq.max(axis=1)
    tie1 = eligible & (pq == best_p[:, None])
    sq = np.where(tie1, secondary, -1.0)
    best_s = sq.max(axis=1)
    tie2 = tie1 & (sq == best_s[:, None])
    return tie2.argmax(axis=1)


def _detect_scope(scope, params, days, hods, winners, n_locs, first_day, last_day):
    """Label every anchor day in [first_day, last_day] for one scope.

    The day axis holds only scope-relevant days: every calendar day for
    home, business days for work (work windows exclude weekends, so they
    slide over the business-day sequence).
    """
    mode = params.window_mode
    delta = params.delta_for(scope)
    if mode is WindowMode.CENTERED:
        pad_lo, pad_hi = delta // 2, delta // 2
    elif mode is WindowMode.PAST_ONLY:
        pad_lo, pad_hi = delta, 0
    else:
        pad_lo, pad_hi = 0, 0

    work = scope is Scope.WORK
    business = sorted(params.windows.business_days)
    if work:
        # enough whole weeks to cover the pad in business days
        cal_pad = (max(pad_lo, pad_hi) // len(business) + 2) * 7
        cal_lo = first_day - cal_pad
        cal_hi = last_day + cal_pad
    else:
        cal_lo = first_day - pad_lo
        cal_hi = last_day + pad_hi

    cal_days = np.arange(cal_lo, cal_hi + 1)
    if work:
        on_axis = np.isin((cal_days + 3) % 7, business)
    else:
        on_axis = np.ones(cal_days.size, dtype=bool)
    n_axis = int(on_axis.sum())
    pos = np.full(cal_days.size, -1, dtype=np.int64)
    pos[on_axis] = np.arange(n_axis)

    bins = sorted(params.windows.bins_for(scope))
    touched = np.zeros(n_axis, dtype=bool)
    day_pos = pos[days - cal_lo]
    touched[day_pos[day_pos >= 0]] = True

    in_bins = np.isin(hods, bins)
    sel_pos = pos[days[in_bins] - cal_lo]
    sel_codes = winners[in_bins]
    keep = sel_pos >= 0
    sel_pos = sel_pos[keep]
    sel_codes = sel_codes[keep]

    counts = np.zeros((n_axis, n_locs), dtype=np.int64)
    np.add.at(counts, (sel_pos, sel_codes), 1)
    bins_with_data = counts.sum(axis=1)

    # day filter: fraction of scope bins with data must reach C_hours
    cov = touched & ((bins_with_data / len(bins)) >= params.C_hours)

    scale = np.zeros(n_axis, dtype=np.int64)
    nz = bins_with_data > 0
    scale[nz] = L_SCALE // bins_with_data[nz]
    W = counts * scale[:, None]
    P = (counts > 0).astype(np.int64)
    W[~cov] = 0
    P[~cov] = 0

    csum_w = np.zeros((n_axis + 1, n_locs), dtype=np.int64)
    np.cumsum(W, axis=0, out=csum_w[1:])
    csum_p = np.zeros((n_axis + 1, n_locs), dtype=np.int64)
    np.cumsum(P, axis=0, out=csum_p[1:])
    csum_c = np.concatenate(([0], np.cumsum(cov.astype(np.int64))))

    n_anchors = last_day - first_day + 1
    anchor_pos = pos[(first_day - cal_lo) + np.arange(n_anchors)]
    on_scope = anchor_pos >= 0
    ap = np.where(on_scope, anchor_pos, 0)

    if mode is WindowMode.CENTERED:
        lo = ap - delta // 2
        hi = ap + delta // 2
        span = np.full(n_anchors, delta + 1, dtype=np.int64)
    elif mode is WindowMode.PAST_ONLY:
        lo = ap - delta
        hi = ap
        span = np.full(n_anchors, delta + 1, dtype=np.int64)
    else:
        in_period = (cal_days >= first_day) & (cal_days <= last_day) & on_axis
        if in_period.any():
            full_lo = int(pos[np.flatnonzero(in_period)[0]])
            full_hi = int(pos[np.flatnonzero(in_period)[-1]])
        else:
            full_lo, full_hi = 0, -1
        lo = np.full(n_anchors, full_lo, dtype=np.int64)
        hi = np.full(n_anchors, full_hi, dtype=np.int64)
        span = np.full(n_anchors, full_hi - full_lo + 1, dtype=np.int64)

    lo = np.clip(lo, 0, n_axis)
    hi = np.clip(hi, -1, n_axis - 1)
    S = csum_w[hi + 1] - csum_w[lo]
    V = csum_p[hi + 1] - csum_p[lo]
    cnt = csum_c[hi + 1] - csum_c[lo]

    # float forms below must match detector.build_window / detect_* exactly
    denom = (cnt * L_SCALE).astype(np.float64)
    avg = np.divide(S, denom[:, None], out=np.zeros_like(S, dtype=np.float64),
                    where=denom[:, None] > 0)
    cntf = cnt.astype(np.float64)
    vfrac = np.divide(V, cntf[:, None], out=np.zeros_like(V, dtype=np.float64),
                      where=cntf[:, None] > 0)
    win_ok = np.divide(cnt, span.astype(np.float64),
                       out=np.zeros(n_anchors, dtype=np.float64),
                       where=span > 0) >= params.c_days_for(scope)
    win_ok &= span > 0

    present = V > 0
    loc = np.full(n_anchors, -1, dtype=np.int64)
    reason = np.full(n_anchors, _NO_CAND, dtype=np.int64)

    if work:
        base = present & (avg >= params.f_hours_W)
        primary = base & (vfrac >= params.f_days_W)
        pick_primary = _rank_two_keys(vfrac, avg, primary)
        pick_fallback = _rank_two_keys(avg, vfrac, base)
        detected = base.any(axis=1)
        pick = np.where(primary.any(axis=1), pick_primary, pick_fallback)
    else:
        qualified = present & (avg >= params.f_hours_H)
        detected = qualified.any(axis=1)
        pick = _rank_two_keys(avg, vfrac, qualified)

    loc[detected] = pick[detected]

    loc[~win_ok] = -1
    reason[~win_ok] = _WIN_COV

    day_ok = cov[ap] & on_scope
    loc[~day_ok] = -1
    reason[~day_ok] = _DAY_COV

    if work:
        loc[~on_scope] = -1
        reason[~on_scope] = _NON_BIZ

    reason[loc >= 0] = -1
    return loc, reason


def detect_user_arrays(starts, ends, codes, n_locs, params: HowdeParams):
    """Run detection on one user's stop arrays (codes in lexicographic order).

    Returns ``(first_day, home_loc, home_reason, work_loc, work_reason)``
    with one entry per calendar day of the observed span; loc entries are
    local codes or -1, reasons index ``UndetectedReason`` order or -1.
    """
    hours, winners = hour_winners(starts, ends, codes)
    if hours.size == 0:
        return None
    days = np.floor_divide(hours, HOURS_PER_DAY)
    hods = (hours - days * HOURS_PER_DAY).astype(np.int64)
    first_day = int(days.min())
    last_day = int(days.max())

    home_loc, home_reason = _detect_scope(
        Scope.HOME, params, days, hods, winners, n_locs, first_day, last_day)
    work_loc, work_reason = _detect_scope(
        Scope.WORK, params, days, hods, winners, n_locs, first_day, last_day)
    return first_day, home_loc, home_reason, work_loc, work_reason


def detect_user_stops(stops, params: HowdeParams):
    """Adapter from :class:`StopRecord` lists to the array pipeline."""
    stops = sorted(stops, key=lambda s: s.start)
    starts = np.array([s.start for s in stops], dtype=np.int64)
    ends = np.array([s.end for s in stops], dtype=np.int64)
    check_no_overlap(stops[0].user_id, starts, ends)
    vocab = sorted({s.loc_id for s in stops})
    index = {loc: i for i, loc in enumerate(vocab)}
    codes = np.array([index[s.loc_id] for s in stops], dtype=np.int64)
    result = detect_user_arrays(starts, ends, codes, len(vocab), params)
    if result is None:
        return None
    first_day, home_loc, home_reason, work_loc, work_reason = result
    return first_day, home_loc, home_reason, work_loc, work_reason, vocab
