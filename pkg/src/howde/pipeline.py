"""Frame-level entry points: bulk detection, evaluation, sweeps, synthesis.

Everything here consumes and produces the CSV-schema DataFrames defined in
:mod:`howde.io`; the command line and the scripting bindings are both thin
shells over these functions, so their outputs are identical by construction.
"""

from __future__ import annotations

import datetime as dt
import itertools

import numpy as np
import pandas as pd

from . import engine, io
from .baselines import run_baseline
from .config import params_from_mapping
from .metrics import Granularity, GroundTruth, evaluate
from .model import HowdeParams, IngestionError, Scope, UndetectedReason
from .parallel import chunked, ordered_map, thread_count
from .synth import PopulationConfig, build_agents, generate_rows, population_truth

_STATUS = np.array(["DETECTED"] + [r.value for r in UndetectedReason], dtype=object)


def _lex_codes(values: np.ndarray):
    """Codes in lexicographic vocabulary order plus the sorted vocabulary."""
    raw_codes, uniques = pd.factorize(values)
    uniques = np.asarray(uniques, dtype=object)
    order = np.argsort(uniques)
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    return rank[raw_codes], uniques[order]


def _detect_chunk(task):
    params, users = task
    out = []
    for user_id, starts, ends, codes, vocab in users:
        result = engine.detect_user_arrays(starts, ends, codes, len(vocab), params)
        if result is None:
            continue
        out.append((user_id,) + result + (vocab,))
    return out


def detect_frame(stops: pd.DataFrame, params: HowdeParams | None = None,
                 threads: int | None = None) -> pd.DataFrame:
    """Daily detection labels for a stops frame (all users).

    Output rows are ordered by (user_id, date) and cover every calendar
    day of each user's observed span. Deterministic at any parallelism.
    """
    params = params or HowdeParams()
    if len(stops) == 0:
        return pd.DataFrame(columns=list(io.LABEL_COLUMNS))

    users = stops["user_id"].to_numpy(dtype=object)
    order = np.lexsort((stops["start"].to_numpy(), users))
    users = users[order]
    starts = stops["start"].to_numpy(dtype=np.int64)[order]
    ends = stops["end"].to_numpy(dtype=np.int64)[order]
    loc_codes, vocab = _lex_codes(stops["loc_id"].to_numpy(dtype=object)[order])

    boundaries = np.flatnonzero(users[1:] != users[:-1]) + 1
    user_slices = np.split(np.arange(users.size), boundaries)

    tasks = []
    for rows in user_slices:
        u_starts = starts[rows]
        u_ends = ends[rows]
        local, local_vocab_idx = np.unique(loc_codes[rows], return_inverse=True)
        user_vocab = [str(v) for v in vocab[local]]
        tasks.append((str(users[rows[0]]), u_starts, u_ends,
                      local_vocab_idx.astype(np.int64), user_vocab))

    n_threads = thread_count(threads)
    chunks = chunked(tasks, max(n_threads * 4, 1))
    results = ordered_map(_detect_chunk, [(params, c) for c in chunks], n_threads)

    cols = {name: [] for name in io.LABEL_COLUMNS}
    for chunk_result in results:
        for user_id, first_day, hl, hr, wl, wr, user_vocab in chunk_result:
            n = hl.size
            locs = np.asarray(user_vocab + [""], dtype=object)
            dates = (np.datetime64("1970-01-01") + (first_day + np.arange(n))).astype(str)
            cols["user_id"].append(np.full(n, user_id, dtype=object))
            cols["date"].append(dates.astype(object))
            cols["home_loc"].append(locs[np.where(hl >= 0, hl, len(user_vocab))])
            cols["home_status"].append(_STATUS[np.where(hl >= 0, 0, hr + 1)])
            cols["work_loc"].append(locs[np.where(wl >= 0, wl, len(user_vocab))])
            cols["work_status"].append(_STATUS[np.where(wl >= 0, 0, wr + 1)])
    if not cols["user_id"]:
        return pd.DataFrame(columns=list(io.LABEL_COLUMNS))
    return pd.DataFrame({name: np.concatenate(parts) for name, parts in cols.items()})


def _baseline_chunk(task):
    method, coords, harmonized, users = task
    rows = []
    for user_id, records in users:
        result = run_baseline(records, method, coords=coords, harmonized=harmonized)
        rows.append((user_id, result.home or "", result.work or "",
                     str(result.qualifies).lower()))
    return rows


def baseline_frame(stops: pd.DataFrame, method: str, coords=None,
                   harmonized: bool = False, threads: int | None = None) -> pd.DataFrame:
    """Static per-user baseline labels (columns of the baseline CSV)."""
    if len(stops) == 0:
        return pd.DataFrame(columns=list(io.BASELINE_COLUMNS))
    by_user = []
    for user_id, group in stops.groupby("user_id", sort=True):
        by_user.append((str(user_id), io.stop_records(group)))
    n_threads = thread_count(threads)
    chunks = chunked(by_user, max(n_threads * 4, 1))
    results = ordered_map(_baseline_chunk,
                          [(method, coords, harmonized, c) for c in chunks],
                          n_threads)
    rows = [r for chunk in results for r in chunk]
    return pd.DataFrame(rows, columns=list(io.BASELINE_COLUMNS))


def _scope_columns(scope: Scope):
    return (("home_loc", "home_status") if scope is Scope.HOME
            else ("work_loc", "work_status"))


def weekly_detected(labels: pd.DataFrame, scope: Scope) -> dict:
    """Reduce a daily labels frame to {(user, iso_week): modal detected loc}."""
    loc_col, status_col = _scope_columns(scope)
    det = labels[labels[status_col] == "DETECTED"]
    if len(det) == 0:
        return {}
    dates = pd.to_datetime(det["date"])
    iso = dates.dt.isocalendar()
    grouped = (
        pd.DataFrame({
            "user_id": det["user_id"].astype(str),
            "year": iso["year"].astype(int),
            "week": iso["week"].astype(int),
            "loc": det[loc_col].astype(str),
        })
        .groupby(["user_id", "year", "week", "loc"]).size().reset_index(name="n")
        .sort_values(["user_id", "year", "week", "n", "loc"],
                     ascending=[True, True, True, False, True], kind="stable")
        .drop_duplicates(["user_id", "year", "week"], keep="first")
    )
    return {(r.user_id, (int(r.year), int(r.week))): r.loc
            for r in grouped.itertuples(index=False)}


def user_detected(labels: pd.DataFrame, scope: Scope) -> dict:
    """All detected locations per user from a daily labels frame."""
    loc_col, status_col = _scope_columns(scope)
    det = labels[labels[status_col] == "DETECTED"]
    out: dict = {}
    for user_id, locs in det.groupby(det["user_id"].astype(str))[loc_col]:
        out[user_id] = frozenset(str(x) for x in locs)
    return out


def evaluate_frame(labels: pd.DataFrame, truth: GroundTruth,
                   bootstrap_b: int = 1000, seed: int = 0):
    """Evaluate a labels frame (daily or baseline schema) against truth."""
    if "date" in labels.columns:
        if truth.granularity is Granularity.USER_WEEK:
            detected = weekly_detected(labels, truth.scope)
        else:
            detected = user_detected(labels, truth.scope)
    else:
        loc_col = "home_loc" if truth.scope is Scope.HOME else "work_loc"
        by_user = {str(r.user_id): (str(getattr(r, loc_col)) or None)
                   for r in labels.itertuples(index=False)}
        if truth.granularity is Granularity.USER_WEEK:
            detected = {key: by_user.get(key[0]) for key in truth.entries}
        else:
            detected = {user: by_user.get(user) for user in truth.entries}
    return evaluate(detected, truth, bootstrap_b=bootstrap_b, seed=seed)


def report_record(report, scope: str, protocol: str) -> dict:
    """The evaluation report as a flat JSON-ready record."""
    return {
        "scope": scope, "protocol": protocol,
        "n_truth": report.n_truth, "n_detected": report.n_detected,
        "n_matched": report.n_matched,
        "detected_accuracy": report.detected_accuracy,
        "frac_not_detected": report.frac_not_detected,
        "acc_stderr": report.acc_stderr, "fnd_stderr": report.fnd_stderr,
        "acc_ci": list(report.acc_ci), "fnd_ci": list(report.fnd_ci),
        "bootstrap_B": report.bootstrap_b, "seed": report.seed,
    }


def users_frame(region_by_user: dict) -> pd.DataFrame:
    return pd.DataFrame(sorted(region_by_user.items()),
                        columns=["user_id", "region_id"])


def prefilter_frame(stops: pd.DataFrame, min_days: int) -> pd.DataFrame:
    """Keep users whose stops touch at least ``min_days`` calendar days."""
    if min_days <= 0 or len(stops) == 0:
        return stops
    starts = stops["start"].to_numpy(dtype=np.int64)
    ends = stops["end"].to_numpy(dtype=np.int64)
    first = np.floor_divide(starts, 86400)
    last = np.floor_divide(ends - 1, 86400)
    n_days = (last - first + 1).astype(np.int64)
    row_idx = np.repeat(np.arange(len(stops)), n_days)
    offsets = np.arange(int(n_days.sum())) - np.repeat(np.cumsum(n_days) - n_days, n_days)
    days = first[row_idx] + offsets
    user_codes, uniques = pd.factorize(stops["user_id"].to_numpy(dtype=object))
    pairs = np.unique(np.stack([user_codes[row_idx], days], axis=1), axis=0)
    counts = np.bincount(pairs[:, 0], minlength=len(uniques))
    keep_users = {str(uniques[i]) for i in np.flatnonzero(counts >= min_days)}
    return stops[stops["user_id"].isin(keep_users)].reset_index(drop=True)


def sweep_frames(stops: pd.DataFrame, truth_by_scope: dict,
                 base_params: HowdeParams, grid: dict,
                 bootstrap_b: int = 200, seed: int = 0,
                 threads: int | None = None) -> pd.DataFrame:
    """Grid sweep over parameter lists, one evaluation row per combination.

    ``grid`` maps parameter names to value lists; ``truth_by_scope`` maps
    Scope to a GroundTruth table. Emits accuracy/fraction-not-detected
    per scope per configuration.
    """
    names = sorted(grid)
    rows = []
    for combo in itertools.product(*(grid[name] for name in names)):
        override = dict(zip(names, combo))
        params = _merge_params(base_params, override)
        labels = detect_frame(stops, params, threads=threads)
        for scope, truth in sorted(truth_by_scope.items(), key=lambda kv: kv[0].value):
            report = evaluate_frame(labels, truth, bootstrap_b=bootstrap_b, seed=seed)
            row = dict(override)
            row.update({
                "scope": scope.value,
                "n_truth": report.n_truth,
                "n_detected": report.n_detected,
                "n_matched": report.n_matched,
                "detected_accuracy": report.detected_accuracy,
                "acc_stderr": report.acc_stderr,
                "frac_not_detected": report.frac_not_detected,
                "fnd_stderr": report.fnd_stderr,
            })
            rows.append(row)
    return pd.DataFrame(rows)


def _merge_params(base: HowdeParams, override: dict) -> HowdeParams:
    values = {
        "delta_T_H": base.delta_T_H, "delta_T_W": base.delta_T_W,
        "C_hours": base.C_hours, "C_days_H": base.C_days_H,
        "C_days_W": base.C_days_W, "f_hours_H": base.f_hours_H,
        "f_hours_W": base.f_hours_W, "f_days_W": base.f_days_W,
        "window_mode": base.window_mode,
    }
    values.update(override)
    params = params_from_mapping(values)
    return HowdeParams(**{**params.__dict__, "windows": base.windows})


def synth_population(cfg: PopulationConfig, chunk_agents: int = 500):
    """Yield per-chunk stop frames plus the full truth/coords/users tables.

    Returns ``(chunks, truths, coords, region_by_user)`` where ``chunks``
    is a generator of stop DataFrames (agents in user order).
    """
    specs, coords, region_by_user = build_agents(cfg)
    truths = []

    def chunks():
        for i in range(0, len(specs), chunk_agents):
            rows = []
            for spec in specs[i:i + chunk_agents]:
                agent_rows, truth = generate_rows(spec)
                rows.extend(agent_rows)
                truths.append(truth)
            yield pd.DataFrame(rows, columns=list(io.STOP_COLUMNS))

    return chunks(), truths, coords, region_by_user


def synth_frames(cfg: PopulationConfig):
    """Whole synthetic population as in-memory frames.

    Returns ``(stops, truth_frameable, coords, region_by_user)`` where the
    truth object is the list of GroundTruth tables at both granularities
    and scopes.
    """
    chunks, truths, coords, region_by_user = synth_population(cfg)
    stops = pd.concat(list(chunks), ignore_index=True)
    tables = [population_truth(truths, scope, gran)
              for scope in (Scope.HOME, Scope.WORK)
              for gran in (Granularity.USER_WEEK, Granularity.USER)]
    return stops, tables, coords, region_by_user
