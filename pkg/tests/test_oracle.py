"""Engine vs naive per-anchor reference: bit-exact agreement.

The acceptance suite runs the large corpus; here randomized small users
cover the window modes and parameter space cheaply.
"""

import numpy as np
import pytest

from howde.detector import run_howde
from howde.model import HowdeParams, StopRecord, WindowMode
from howde.reference import run_howde_reference

from conftest import BASE_DAY


def random_stops(rng, n_days=40, n_locs=4, density=0.6):
    locs = [f"L{i}" for i in range(n_locs)]
    stops = []
    for d in range(BASE_DAY, BASE_DAY + n_days):
        t = d * 86400
        end_of_day = t + 86400
        while t < end_of_day:
            span = int(rng.integers(1800, 6 * 3600))
            span = min(span, end_of_day - t)
            if rng.random() < density:
                loc = locs[int(rng.integers(0, n_locs))]
                stops.append(StopRecord("u", loc, int(t), int(t + span)))
            t += span + int(rng.integers(0, 3600))
    return stops


def random_params(rng, mode):
    delta_h = int(rng.integers(0, 15)) * 2
    delta_w = int(rng.integers(0, 15)) * 2
    if mode is WindowMode.PAST_ONLY:
        delta_h += int(rng.integers(0, 2))
        delta_w += int(rng.integers(0, 2))
    return HowdeParams(
        delta_T_H=delta_h,
        delta_T_W=delta_w,
        C_hours=float(rng.choice([0.0, 0.2, 0.4, 0.6])),
        C_days_H=float(rng.uniform(0, 0.9)),
        C_days_W=float(rng.uniform(0, 0.9)),
        f_hours_H=float(rng.uniform(0.1, 0.95)),
        f_hours_W=float(rng.uniform(0.1, 0.95)),
        f_days_W=float(rng.uniform(0.1, 0.95)),
        window_mode=mode,
    )


@pytest.mark.parametrize("mode", list(WindowMode))
@pytest.mark.parametrize("case", range(4))
def test_engine_matches_reference(mode, case):
    rng = np.random.default_rng(1000 * case + hash(mode.value) % 1000)
    stops = random_stops(rng, n_days=int(rng.integers(20, 50)))
    params = random_params(rng, mode)
    assert run_howde(stops, params) == run_howde_reference(stops, params)


def test_engine_matches_reference_sparse_user():
    rng = np.random.default_rng(99)
    stops = random_stops(rng, n_days=30, density=0.15)
    for mode in WindowMode:
        params = random_params(rng, mode)
        assert run_howde(stops, params) == run_howde_reference(stops, params)
