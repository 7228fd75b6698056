"""Hourly-bin aggregation: dominance, splitting, determinism, conservation."""

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from howde.binning import bin_hours, day_features, hour_contributions
from howde.model import (
    HowdeParams,
    OverlappingStopsError,
    Scope,
    StopRecord,
    date_of,
)

from conftest import BASE_DAY, stop, ts


def brute_force_slots(stops, day):
    """Independent dominance oracle: per-minute occupancy scan."""
    slots = [None] * 24
    for hour in range(24):
        dwell = {}
        lo = day * 86400 + hour * 3600
        for s in stops:
            overlap = min(s.end, lo + 3600) - max(s.start, lo)
            if overlap > 0:
                dwell[s.loc_id] = dwell.get(s.loc_id, 0) + overlap
        if dwell:
            slots[hour] = min(dwell, key=lambda loc: (-dwell[loc], loc))
    return tuple(slots)


class TestBinHours:
    def test_dominance_by_dwell(self):
        stops = [stop("u", "A", BASE_DAY, 1, 4 + 40 / 60),
                 stop("u", "B", BASE_DAY, 4 + 40 / 60, 5)]
        [day] = bin_hours(stops)
        assert day.slots[1] == day.slots[2] == day.slots[3] == "A"
        assert day.slots[4] == "A"  # 40 min beats 20 min
        assert day.slots[5] is None

    def test_empty_hour_stays_empty(self):
        stops = [stop("u", "A", BASE_DAY, 1, 4)]
        [day] = bin_hours(stops)
        assert day.slots[13] is None

    def test_boundary_split_unique_occupants(self):
        stops = [stop("u", "A", BASE_DAY, 3.5, 4), stop("u", "B", BASE_DAY, 4, 4.5)]
        [day] = bin_hours(stops)
        assert day.slots[3] == "A"
        assert day.slots[4] == "B"

    def test_tie_breaks_to_smaller_loc_id(self):
        # B first in input; both occupy 30 minutes of bin 4
        stops = [stop("u", "B", BASE_DAY, 4.5, 5), stop("u", "A", BASE_DAY, 4, 4.5)]
        [day] = bin_hours(stops)
        assert day.slots[4] == "A"
        assert day.slots == brute_force_slots(stops, BASE_DAY)

    def test_shuffled_input_matches_brute_force(self):
        rng = random.Random(7)
        stops = []
        t = ts(BASE_DAY, 0)
        locs = ["A", "B", "C"]
        while t < ts(BASE_DAY + 2, 0):
            span = rng.randrange(600, 7200)
            stops.append(StopRecord("u", rng.choice(locs), t, t + span))
            t += span + rng.randrange(0, 1800)
        expected = {d: brute_force_slots(stops, d) for d in (BASE_DAY, BASE_DAY + 1, BASE_DAY + 2)}
        for _ in range(5):
            rng.shuffle(stops)
            days = {d.date: d.slots for d in bin_hours(stops)}
            for dnum, slots in expected.items():
                if any(s is not None for s in slots):
                    assert days[date_of(dnum)] == slots

    def test_midnight_straddle_splits_between_days(self):
        stops = [stop("u", "A", BASE_DAY, 23, 25)]
        days = bin_hours(stops)
        assert [d.date for d in days] == [date_of(BASE_DAY), date_of(BASE_DAY + 1)]
        assert days[0].slots[23] == "A"
        assert days[1].slots[0] == "A"
        assert days[1].slots[1] is None

    def test_overlap_raises_with_user_and_pair(self):
        stops = [stop("u7", "A", BASE_DAY, 1, 3), stop("u7", "B", BASE_DAY, 2, 4)]
        with pytest.raises(OverlappingStopsError, match="u7"):
            bin_hours(stops)

    def test_touching_stops_are_fine(self):
        stops = [stop("u", "A", BASE_DAY, 1, 3), stop("u", "B", BASE_DAY, 3, 4)]
        [day] = bin_hours(stops)
        assert day.slots[2] == "A" and day.slots[3] == "B"


@st.composite
def random_user_stops(draw):
    n = draw(st.integers(1, 12))
    bounds = draw(st.lists(st.integers(0, 86400 * 3 // 60), min_size=2 * n,
                           max_size=2 * n, unique=True))
    bounds = sorted(b * 60 for b in bounds)
    locs = st.sampled_from(["A", "B", "C"])
    stops = []
    for i in range(n):
        lo, hi = bounds[2 * i], bounds[2 * i + 1]
        if hi > lo:
            stops.append(StopRecord("u", draw(locs), lo, hi))
    return stops


class TestDwellConservation:
    @settings(max_examples=50, deadline=None)
    @given(random_user_stops())
    def test_total_dwell_per_hour_is_conserved(self, stops):
        if not stops:
            return
        starts = np.array([s.start for s in stops])
        ends = np.array([s.end for s in stops])
        _, hours, dwell = hour_contributions(starts, ends)
        by_hour = {}
        for h, w in zip(hours, dwell):
            by_hour[int(h)] = by_hour.get(int(h), 0) + int(w)
        for hour, total in by_hour.items():
            lo = hour * 3600
            expected = sum(max(0, min(s.end, lo + 3600) - max(s.start, lo)) for s in stops)
            assert total == expected
        assert sum(by_hour.values()) == sum(s.end - s.start for s in stops)

    @settings(max_examples=30, deadline=None)
    @given(random_user_stops())
    def test_permutation_invariance(self, stops):
        if not stops:
            return
        shuffled = list(reversed(stops))
        assert bin_hours(stops) == bin_hours(shuffled)


class TestDayFeatures:
    def test_home_fraction_arithmetic(self):
        stops = [stop("u", "A", BASE_DAY, 0, 3), stop("u", "B", BASE_DAY, 3, 4)]
        days = bin_hours(stops)
        [feat] = day_features(days, Scope.HOME, HowdeParams())
        assert feat.bins_with_data == 4
        assert feat.frac_by_loc == {"A": 0.75, "B": 0.25}
        assert feat.coverage_ok  # 4/6 >= 0.40

    def test_single_bin_fails_default_coverage(self):
        stops = [stop("u", "A", BASE_DAY, 2, 3)]
        days = bin_hours(stops)
        [feat] = day_features(days, Scope.HOME, HowdeParams())
        assert feat.bins_with_data == 1
        assert not feat.coverage_ok  # 1/6 < 0.40

    def test_work_scope_skips_weekends(self):
        saturday = BASE_DAY + 5
        stops = [stop("u", "W", saturday, 9, 16)]
        days = bin_hours(stops)
        assert day_features(days, Scope.WORK, HowdeParams()) == []
        # the same day still yields a HOME feature
        assert len(day_features(days, Scope.HOME, HowdeParams())) == 1

    @settings(max_examples=40, deadline=None)
    @given(random_user_stops())
    def test_fractions_sum_to_one(self, stops):
        if not stops:
            return
        days = bin_hours(stops)
        for scope in (Scope.HOME, Scope.WORK):
            for feat in day_features(days, scope, HowdeParams()):
                if feat.bins_with_data:
                    assert abs(sum(feat.frac_by_loc.values()) - 1.0) < 1e-12
        # counts never exceed the scope bin set
        for feat in day_features(days, Scope.HOME, HowdeParams()):
            assert feat.bins_with_data <= 6
