"""Behavioural-profile analysis of hourly day sequences.

Days are encoded as 24 symbols (target location / other location /
missing), clustered with K-Modes under Hamming dissimilarity, and the
per-user spread over clusters is summarised by normalised entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Scope

TARGET, OTHER, MISSING = 0, 1, 2
SYMBOLS = "TOM"
KMODES_MAX_ITER = 100


@dataclass(frozen=True)
class DaySequence:
    """One user-day as 24 categorical codes for one scope."""

    user_id: str
    date: object
    scope: Scope
    codes: tuple

    def __post_init__(self) -> None:
        if len(self.codes) != 24:
            raise ValueError(f"expected 24 codes, got {len(self.codes)}")


@dataclass(frozen=True)
class ClusterModel:
    """K-Modes result: per-cluster modes and per-sequence assignments."""

    k: int
    modes: np.ndarray
    labels: np.ndarray
    cost: int
    keys: tuple

    @property
    def assignment(self) -> dict:
        return {key: int(label) for key, label in zip(self.keys, self.labels)}

    def mode_string(self, cluster: int) -> str:
        return "".join(SYMBOLS[c] for c in self.modes[cluster])

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)


def encode_days(days, target: str, scope: Scope) -> list:
    """Encode hourly days against a target location.

    A slot is TARGET when the dominant location equals ``target``, OTHER
    for any different location (for work scope this includes hours spent
    at home), MISSING when the slot has no data.
    """
    out = []
    for day in days:
        codes = tuple(
            MISSING if loc is None else (TARGET if loc == target else OTHER)
            for loc in day.slots
        )
        out.append(DaySequence(user_id=day.user_id, date=day.date,
                               scope=scope, codes=codes))
    return out


def _hamming(x: np.ndarray, mode: np.ndarray) -> np.ndarray:
    return (x != mode[None, :]).sum(axis=1)


def _cao_init(x: np.ndarray, k: int) -> np.ndarray:
    """Density-based initial modes (deterministic, ties by point index)."""
    n, m = x.shape
    dens = np.zeros(n)
    for j in range(m):
        values, counts = np.unique(x[:, j], return_counts=True)
        freq = dict(zip(values.tolist(), counts.tolist()))
        dens += np.array([freq[v] for v in x[:, j].tolist()], dtype=float) / m
    dens /= n

    centers = np.empty((k, m), dtype=x.dtype)
    centers[0] = x[int(np.argmax(dens))]
    if k == 1:
        return centers
    score = _hamming(x, centers[0]) * dens
    centers[1] = x[int(np.argmax(score))]
    for i in range(2, k):
        dd = np.stack([_hamming(x, centers[j]) * dens for j in range(i)])
        centers[i] = x[int(np.argmax(dd.min(axis=0)))]
    return centers


def _column_modes(x: np.ndarray, labels: np.ndarray, k: int,
                  modes: np.ndarray) -> np.ndarray:
    out = modes.copy()
    for c in range(k):
        members = x[labels == c]
        if members.size == 0:
            continue
        for j in range(x.shape[1]):
            out[c, j] = np.bincount(members[:, j], minlength=3).argmax()
    return out


def kmodes(sequences, k: int, seed: int = 0, init: str = "cao",
           max_iter: int = KMODES_MAX_ITER) -> ClusterModel:
    """Lloyd-style K-Modes with Hamming dissimilarity and column-mode updates.

    ``init="cao"`` (default) is density-based and deterministic;
    ``init="random"`` samples distinct sequences with the given seed.
    Stops when assignments no longer change or after ``max_iter`` rounds.
    """
    sequences = list(sequences)
    x = np.array([s.codes for s in sequences], dtype=np.uint8)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("kmodes needs at least one sequence")
    distinct = np.unique(x, axis=0)
    if k < 1 or k > distinct.shape[0]:
        raise ValueError(
            f"k={k} outside 1..{distinct.shape[0]} (number of distinct sequences)")

    if init == "cao":
        modes = _cao_init(x, k)
    elif init == "random":
        rng = np.random.default_rng(seed)
        pick = rng.choice(distinct.shape[0], size=k, replace=False)
        modes = distinct[pick].copy()
    else:
        raise ValueError(f"unknown init {init!r}")

    n = x.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        dist = np.stack([_hamming(x, modes[c]) for c in range(k)], axis=1)
        new_labels = dist.argmin(axis=1)

        # re-seed empty clusters with the point farthest from its own mode
        for c in range(k):
            if not (new_labels == c).any():
                own = dist[np.arange(n), new_labels]
                victim = int(np.argmax(own))
                new_labels[victim] = c
                dist[victim, c] = 0

        if (new_labels == labels).all():
            break
        labels = new_labels
        modes = _column_modes(x, labels, k, modes)

    dist = np.stack([_hamming(x, modes[c]) for c in range(k)], axis=1)
    cost = int(dist[np.arange(n), labels].sum())
    keys = tuple((s.user_id, s.date) for s in sequences)
    return ClusterModel(k=k, modes=modes, labels=labels, cost=cost, keys=keys)


def elbow_from_costs(ks, costs) -> int:
    """Elbow of a cost curve: largest gap between the curve and its chord.

    The chord joins the curve's endpoints; distances are vertical offsets
    (the ranking is invariant to axis scaling). A flat or linear curve has
    no elbow and yields the smallest k.
    """
    ks = list(ks)
    costs = [float(c) for c in costs]
    if len(ks) != len(costs) or len(ks) < 2:
        raise ValueError("need matching cost values for at least two k")
    k0, k1 = ks[0], ks[-1]
    c0, c1 = costs[0], costs[-1]
    slope = (c1 - c0) / (k1 - k0)
    gaps = [c0 + slope * (k - k0) - c for k, c in zip(ks, costs)]
    best = max(range(len(ks)), key=lambda i: (gaps[i], -ks[i]))
    if gaps[best] <= 1e-12:
        return ks[0]
    return ks[best]


def elbow_k(sequences, k_range, seed: int = 0, n_seeds: int = 3) -> int:
    """Pick k by the elbow rule over seed-averaged K-Modes costs."""
    ks = sorted(set(int(k) for k in k_range))
    if len(ks) < 2:
        raise ValueError("k_range must contain at least two distinct values")
    costs = []
    for k in ks:
        runs = [kmodes(sequences, k, seed=seed + i, init="random").cost
                for i in range(n_seeds)]
        costs.append(float(np.mean(runs)))
    return elbow_from_costs(ks, costs)


def profile_entropy(counts, k: int) -> float:
    """Normalised Shannon entropy of a cluster-assignment distribution.

    0 when all days share one cluster, 1 for a uniform spread over all k;
    zero-count clusters contribute nothing; k=1 is 0 by definition.
    """
    counts = [int(c) for c in counts if c > 0]
    total = sum(counts)
    if total < 1:
        raise ValueError("need at least one assigned day")
    if k <= 1:
        return 0.0
    h = 0.0
    for n in counts:
        p = n / total
        h -= p * math.log(p)
    return h / math.log(k)


def mean_user_entropy(labels_by_user, k: int) -> float:
    """Average normalised entropy over users."""
    values = []
    for user in sorted(labels_by_user):
        labels = np.asarray(labels_by_user[user], dtype=np.int64)
        values.append(profile_entropy(np.bincount(labels, minlength=k), k))
    return float(np.mean(values))


def _permuted(rng, pool: np.ndarray) -> np.ndarray:
    """Shuffled copy of the global day pool; separated for test injection."""
    return rng.permutation(pool)


def entropy_null(labels_by_user, k: int, seed: int = 0,
                 repetitions: int = 10) -> float:
    """Mean entropy after shuffling cluster labels across the day pool.

    Global cluster frequencies are preserved; each user keeps their day
    count. Averages the per-user mean entropy over ``repetitions`` shuffles.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    users = sorted(labels_by_user)
    sizes = [len(labels_by_user[u]) for u in users]
    pool = np.concatenate([np.asarray(labels_by_user[u], dtype=np.int64)
                           for u in users]) if users else np.empty(0, np.int64)
    rng = np.random.default_rng(seed)
    means = []
    for _ in range(repetitions):
        shuffled = _permuted(rng, pool)
        offset = 0
        values = []
        for size in sizes:
            chunk = shuffled[offset:offset + size]
            offset += size
            values.append(profile_entropy(np.bincount(chunk, minlength=k), k))
        means.append(float(np.mean(values)))
    return float(np.mean(means))
