"""Evaluation of detector output against ground truth.

Two protocols: user-week keys (weekly labels reduced from daily output)
and user keys (a user matches if any detected label over the period is
among the annotated locations). Detected accuracy and the fraction not
detected are tracked separately; they are not complements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import HowdeError, Scope


class Granularity(Enum):
    USER_WEEK = "user_week"
    USER = "user"


class ProtocolError(HowdeError):
    """Detected labels and ground truth do not describe the same keys."""


@dataclass(frozen=True)
class GroundTruth:
    """Annotated locations per evaluation key.

    Keys are ``(user_id, (iso_year, iso_week))`` for USER_WEEK granularity
    and ``user_id`` for USER granularity; each key maps to a non-empty set
    of acceptable locations (a user may have several annotated homes).
    """

    scope: Scope
    granularity: Granularity
    entries: dict

    def __post_init__(self) -> None:
        for key, locs in self.entries.items():
            if not locs:
                raise ValueError(f"ground truth for {key!r} has no locations")


@dataclass(frozen=True)
class EvalReport:
    n_truth: int
    n_detected: int
    n_matched: int
    detected_accuracy: float
    frac_not_detected: float
    acc_stderr: float
    fnd_stderr: float
    acc_ci: tuple
    fnd_ci: tuple
    bootstrap_b: int
    seed: int


def iso_week(date) -> tuple:
    cal = date.isocalendar()
    return int(cal[0]), int(cal[1])


def _detected_loc(label, scope: Scope):
    return label.home_loc if scope is Scope.HOME else label.work_loc


def weekly_label(labels, week: tuple, scope: Scope):
    """Modal detected location of one user within one ISO week.

    Undetected days are ignored; modal ties resolve to the smaller
    location id; ``None`` when no day of the week was detected.
    """
    counts: dict = {}
    for label in labels:
        if iso_week(label.date) != week:
            continue
        loc = _detected_loc(label, scope)
        if loc is not None:
            counts[loc] = counts.get(loc, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda loc: (-counts[loc], loc))


def weekly_labels(labels, scope: Scope) -> dict:
    """Reduce daily labels to ``{(user, iso_week): loc or None}``."""
    counts: dict = {}
    seen: set = set()
    for label in labels:
        key = (label.user_id, iso_week(label.date))
        seen.add(key)
        loc = _detected_loc(label, scope)
        if loc is not None:
            week_counts = counts.setdefault(key, {})
            week_counts[loc] = week_counts.get(loc, 0) + 1
    out = {}
    for key in seen:
        week_counts = counts.get(key)
        if week_counts:
            out[key] = min(week_counts, key=lambda loc: (-week_counts[loc], loc))
        else:
            out[key] = None
    return out


def user_label_sets(labels, scope: Scope) -> dict:
    """All detected locations per user over the whole period."""
    out: dict = {}
    for label in labels:
        out.setdefault(label.user_id, set())
        loc = _detected_loc(label, scope)
        if loc is not None:
            out[label.user_id].add(loc)
    return out


def _as_loc_set(value) -> frozenset:
    if value is None:
        return frozenset()
    if isinstance(value, str):
        return frozenset((value,))
    return frozenset(value)


def _resample(rng, n: int, b: int) -> np.ndarray:
    """Bootstrap index matrix; separated out so tests can inject identity."""
    return rng.integers(0, n, size=(b, n))


def evaluate(detected, truth: GroundTruth, bootstrap_b: int = 1000,
             seed: int = 0) -> EvalReport:
    """Detected accuracy and fraction not detected over the truth keys.

    ``detected`` maps evaluation keys to a location, a set of locations,
    or ``None``. Keys absent from ``detected`` count as not detected; a
    key matches when any detected location is among the annotated ones.
    Bootstrap resamples keys with replacement and reports standard
    deviations plus 2.5/97.5 percentile intervals.
    """
    keys = sorted(truth.entries)
    if detected and not any(k in detected for k in keys):
        raise ProtocolError(
            "detected labels and ground truth have disjoint key sets; "
            "check scope, granularity, and key formats"
        )
    det = np.zeros(len(keys), dtype=np.int64)
    match = np.zeros(len(keys), dtype=np.int64)
    for i, key in enumerate(keys):
        locs = _as_loc_set(detected.get(key))
        if locs:
            det[i] = 1
            if locs & truth.entries[key]:
                match[i] = 1

    n_truth = len(keys)
    n_detected = int(det.sum())
    n_matched = int(match.sum())
    fnd = 1.0 - n_detected / n_truth if n_truth else float("nan")
    acc = n_matched / n_detected if n_detected else float("nan")

    acc_std = fnd_std = float("nan")
    acc_ci = fnd_ci = (float("nan"), float("nan"))
    if bootstrap_b > 0 and n_truth > 0:
        rng = np.random.default_rng(seed)
        idx = _resample(rng, n_truth, bootstrap_b)
        det_b = det[idx].sum(axis=1)
        match_b = match[idx].sum(axis=1)
        fnd_b = 1.0 - det_b / n_truth
        with np.errstate(invalid="ignore", divide="ignore"):
            acc_b = np.where(det_b > 0, match_b / np.maximum(det_b, 1), np.nan)
        fnd_std = float(np.std(fnd_b, ddof=1)) if bootstrap_b > 1 else 0.0
        fnd_ci = (float(np.percentile(fnd_b, 2.5)), float(np.percentile(fnd_b, 97.5)))
        valid = acc_b[~np.isnan(acc_b)]
        if valid.size > 1:
            acc_std = float(np.std(valid, ddof=1))
        elif valid.size == 1:
            acc_std = 0.0
        if valid.size:
            acc_ci = (float(np.percentile(valid, 2.5)), float(np.percentile(valid, 97.5)))

    return EvalReport(
        n_truth=n_truth,
        n_detected=n_detected,
        n_matched=n_matched,
        detected_accuracy=acc,
        frac_not_detected=fnd,
        acc_stderr=acc_std,
        fnd_stderr=fnd_std,
        acc_ci=acc_ci,
        fnd_ci=fnd_ci,
        bootstrap_b=bootstrap_b,
        seed=seed,
    )


def evaluate_daily(labels, truth: GroundTruth, bootstrap_b: int = 1000,
                   seed: int = 0) -> EvalReport:
    """Evaluate daily detection labels under the truth's granularity."""
    if truth.granularity is Granularity.USER_WEEK:
        detected = weekly_labels(labels, truth.scope)
    else:
        detected = user_label_sets(labels, truth.scope)
    return evaluate(detected, truth, bootstrap_b=bootstrap_b, seed=seed)


def evaluate_baseline(results, truth: GroundTruth, bootstrap_b: int = 1000,
                      seed: int = 0) -> EvalReport:
    """Evaluate static per-user baseline results against ground truth."""
    by_user = {}
    for r in results:
        by_user[r.user_id] = r.home if truth.scope is Scope.HOME else r.work
    if truth.granularity is Granularity.USER_WEEK:
        detected = {key: by_user.get(key[0]) for key in truth.entries}
    else:
        detected = {user: by_user.get(user) for user in truth.entries}
    return evaluate(detected, truth, bootstrap_b=bootstrap_b, seed=seed)


def prefilter_users(stops, min_days_with_data: int) -> set:
    """Users whose stops touch at least ``min_days_with_data`` calendar days."""
    days_by_user: dict = {}
    for stop in stops:
        first = stop.start // 86400
        last = (stop.end - 1) // 86400
        days = days_by_user.setdefault(stop.user_id, set())
        days.update(range(int(first), int(last) + 1))
    return {user for user, days in days_by_user.items()
            if len(days) >= min_days_with_data}
