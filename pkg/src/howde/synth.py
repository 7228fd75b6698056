"""Synthetic trajectory generator with embedded ground truth.

Agents follow per-day behavioural profiles (commuting, staying home, being
away overnight, night shifts, errand-heavy commuting); per-bin missing
data thins the emitted stops. Schedules of home and work locations yield
ground truth at user-week and user granularity, which makes the generator
the verification oracle for every detector in the package.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .apps import LocationCoords
from .metrics import Granularity, GroundTruth, iso_week
from .model import ConfigError, Scope, StopRecord, date_of, day_number, weekday_of

PROFILES = ("commuter", "commuter_errands", "home_day", "away", "night_shift")

_H, _W, _L, _A, _E = "home", "work", "leisure", "away", "errand"
_HOME_ALL = ((0, 1440, _H),)

# weekday layouts in minutes; weekends of working profiles are home days
_WEEKDAY_LAYOUTS = {
    "commuter": ((0, 480, _H), (540, 960, _W), (1140, 1260, _L), (1260, 1440, _H)),
    "commuter_errands": ((0, 480, _H), (490, 530, _E), (540, 730, _W),
                         (730, 770, _E), (770, 960, _W), (1030, 1060, _E),
                         (1140, 1440, _H)),
    "home_day": _HOME_ALL,
    "away": ((0, 1440, _A),),
    "night_shift": ((0, 420, _W), (540, 960, _H), (1320, 1440, _W)),
}
_WORKING_PROFILES = {"commuter", "commuter_errands", "night_shift"}


def _layout(profile: str, weekday: int):
    if profile in _WORKING_PROFILES and weekday > 4:
        return _HOME_ALL
    return _WEEKDAY_LAYOUTS[profile]


@dataclass(frozen=True)
class ScheduleEntry:
    """A location active over an inclusive range of day numbers."""

    loc_id: str
    start_day: int
    end_day: int

    def __post_init__(self) -> None:
        if self.end_day < self.start_day:
            raise ConfigError(f"schedule entry for {self.loc_id!r} has end before start")


def _check_schedule(entries) -> None:
    ordered = sorted(entries, key=lambda e: e.start_day)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_day <= a.end_day:
            raise ConfigError(
                f"schedule entries {a.loc_id!r} and {b.loc_id!r} overlap in time")


def _active(entries, day: int) -> str | None:
    for e in entries:
        if e.start_day <= day <= e.end_day:
            return e.loc_id
    return None


@dataclass(frozen=True)
class AgentSpec:
    """Recipe for one synthetic agent."""

    user_id: str
    home_schedule: tuple
    work_schedule: tuple = ()
    profile_mix: Mapping = field(default_factory=lambda: {"commuter": 1.0})
    missing_rate: float = 0.0
    seed: int = 0
    extra_locs: Mapping | None = None

    def __post_init__(self) -> None:
        if not self.home_schedule:
            raise ConfigError(f"agent {self.user_id!r} needs a home schedule")
        _check_schedule(self.home_schedule)
        _check_schedule(self.work_schedule)
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError(f"missing_rate must be in [0, 1), got {self.missing_rate}")
        unknown = set(self.profile_mix) - set(PROFILES)
        if unknown:
            raise ConfigError(f"unknown profiles {sorted(unknown)}")
        if not self.profile_mix or sum(self.profile_mix.values()) <= 0:
            raise ConfigError("profile_mix needs positive weight")

    def period(self) -> tuple:
        lo = min(e.start_day for e in self.home_schedule)
        hi = max(e.end_day for e in self.home_schedule)
        return lo, hi

    def aux_loc(self, role: str) -> str:
        if self.extra_locs and role in self.extra_locs:
            return self.extra_locs[role]
        return f"{role[0]}_{self.user_id}"


@dataclass(frozen=True)
class AgentTruth:
    """Ground truth derived from an agent's schedules."""

    user_id: str
    home_by_week: dict
    work_by_week: dict
    home_locs: frozenset
    work_locs: frozenset


def generate_rows(spec: AgentSpec):
    """Generate one agent's stops as (user, loc, start, end) tuples.

    Deterministic in (spec, seed). Stops never cross midnight and never
    overlap; each day follows one sampled profile with hour bins dropped
    independently at the missing rate.
    """
    rng = np.random.default_rng(spec.seed)
    names = sorted(spec.profile_mix)
    weights = np.array([spec.profile_mix[n] for n in names], dtype=float)
    probs = weights / weights.sum()

    lo, hi = spec.period()
    rows = []
    home_by_week: dict = {}
    work_by_week: dict = {}
    for day in range(lo, hi + 1):
        profile = names[int(rng.choice(len(names), p=probs))]
        drops = rng.random(24) < spec.missing_rate

        home = _active(spec.home_schedule, day)
        work = _active(spec.work_schedule, day)
        week = iso_week(date_of(day))
        if home is not None:
            home_by_week.setdefault(week, set()).add(home)
        if work is not None:
            work_by_week.setdefault(week, set()).add(work)

        resolved = []
        for s, e, role in _layout(profile, weekday_of(day)):
            if role == _H:
                loc = home
            elif role == _W:
                loc = work
            else:
                loc = spec.aux_loc(role)
            if loc is None:
                if role == _W:
                    raise ConfigError(
                        f"agent {spec.user_id!r}: profile {profile!r} needs an "
                        f"active work location on day {day}")
                continue
            resolved.append((s, e, loc))

        base = day * 86400
        pending: list = []
        for s, e, loc in resolved:
            h = s // 60
            while h * 60 < e:
                piece_s = max(s, h * 60)
                piece_e = min(e, (h + 1) * 60)
                if piece_e > piece_s and not drops[h]:
                    if pending and pending[-1][2] == loc and pending[-1][1] == piece_s:
                        pending[-1] = (pending[-1][0], piece_e, loc)
                    else:
                        pending.append((piece_s, piece_e, loc))
                h += 1
        for s, e, loc in pending:
            rows.append((spec.user_id, loc, base + s * 60, base + e * 60))

    truth = AgentTruth(
        user_id=spec.user_id,
        home_by_week={w: frozenset(v) for w, v in home_by_week.items()},
        work_by_week={w: frozenset(v) for w, v in work_by_week.items()},
        home_locs=frozenset(e.loc_id for e in spec.home_schedule),
        work_locs=frozenset(e.loc_id for e in spec.work_schedule),
    )
    return rows, truth


def generate(spec: AgentSpec):
    """Generate one agent's :class:`StopRecord` list and ground truth."""
    rows, truth = generate_rows(spec)
    stops = [StopRecord(u, l, s, e) for u, l, s, e in rows]
    return stops, truth


def population_truth(truths, scope: Scope, granularity: Granularity) -> GroundTruth:
    """Merge agent truths into one :class:`GroundTruth` table."""
    entries: dict = {}
    for t in truths:
        if granularity is Granularity.USER_WEEK:
            weekly = t.home_by_week if scope is Scope.HOME else t.work_by_week
            for week, locs in weekly.items():
                if locs:
                    entries[(t.user_id, week)] = locs
        else:
            locs = t.home_locs if scope is Scope.HOME else t.work_locs
            if locs:
                entries[t.user_id] = locs
    return GroundTruth(scope=scope, granularity=granularity, entries=entries)


@dataclass(frozen=True)
class PopulationConfig:
    """Recipe for a whole synthetic population (the CLI synth surface)."""

    agents: int = 100
    days: int = 120
    start_date: dt.date = dt.date(2019, 1, 7)
    seed: int = 0
    missing_min: float = 0.0
    missing_max: float = 0.0
    p_commuter: float = 1.0
    p_commuter_errands: float = 0.0
    p_home_day: float = 0.0
    p_away: float = 0.0
    p_night_shift: float = 0.0
    mover_fraction: float = 0.0
    work_mover_fraction: float = 0.0
    employed_fraction: float = 1.0
    regions: int = 1

    def __post_init__(self) -> None:
        if self.agents < 1 or self.days < 1:
            raise ConfigError("agents and days must be positive")
        if not 0.0 <= self.missing_min <= self.missing_max < 1.0:
            raise ConfigError("need 0 <= missing_min <= missing_max < 1")
        for name in ("mover_fraction", "work_mover_fraction", "employed_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        if self.regions < 1:
            raise ConfigError("regions must be >= 1")


def population_from_mapping(values) -> PopulationConfig:
    """Build a population config from (possibly string-typed) values."""
    fields = {
        "agents": int, "days": int, "seed": int, "regions": int,
        "missing_min": float, "missing_max": float,
        "p_commuter": float, "p_commuter_errands": float, "p_home_day": float,
        "p_away": float, "p_night_shift": float,
        "mover_fraction": float, "work_mover_fraction": float,
        "employed_fraction": float,
        "start_date": lambda v: v if isinstance(v, dt.date) else dt.date.fromisoformat(str(v)),
    }
    unknown = set(values) - set(fields)
    if unknown:
        raise ConfigError(f"unknown population keys: {sorted(unknown)}")
    kwargs = {key: fields[key](value) for key, value in values.items()}
    return PopulationConfig(**kwargs)


def _agent_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=(seed, index)).generate_state(1)[0])


def build_agents(cfg: PopulationConfig):
    """Agent specs, location coordinates, and the user-to-region map."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(cfg.seed, 2**31)))
    lo = day_number(cfg.start_date)
    hi = lo + cfg.days - 1
    width = len(str(max(cfg.agents - 1, 1)))

    mix_employed = {
        "commuter": cfg.p_commuter,
        "commuter_errands": cfg.p_commuter_errands,
        "home_day": cfg.p_home_day,
        "away": cfg.p_away,
        "night_shift": cfg.p_night_shift,
    }
    mix_employed = {k: v for k, v in mix_employed.items() if v > 0}
    if not mix_employed:
        raise ConfigError("profile weights are all zero")
    mix_unemployed = {k: v for k, v in mix_employed.items()
                      if k not in _WORKING_PROFILES}
    if not mix_unemployed:
        mix_unemployed = {"home_day": 1.0}

    specs = []
    coords: dict = {}
    region_by_user: dict = {}
    for i in range(cfg.agents):
        user = f"u{i:0{width}d}"
        region = f"R{i % cfg.regions:03d}"
        region_by_user[user] = region

        base_lat = 40.0 + (i % cfg.regions) * 0.5 + rng.uniform(0, 0.3)
        base_lon = 5.0 + (i % cfg.regions) * 0.5 + rng.uniform(0, 0.3)

        def place(loc_id, dlat, dlon):
            coords[loc_id] = LocationCoords(loc_id, base_lat + dlat, base_lon + dlon, region)

        move_home = rng.random() < cfg.mover_fraction
        if move_home:
            mid = lo + cfg.days // 2
            home_schedule = (ScheduleEntry(f"h_{user}_a", lo, mid - 1),
                             ScheduleEntry(f"h_{user}_b", mid, hi))
            place(f"h_{user}_a", 0.0, 0.0)
            place(f"h_{user}_b", float(rng.uniform(0.05, 0.1)), 0.0)
        else:
            home_schedule = (ScheduleEntry(f"h_{user}", lo, hi),)
            place(f"h_{user}", 0.0, 0.0)

        employed = rng.random() < cfg.employed_fraction
        work_schedule = ()
        if employed:
            move_work = rng.random() < cfg.work_mover_fraction
            w_off = float(rng.uniform(0.03, 0.12))
            if move_work:
                mid = lo + cfg.days // 2
                work_schedule = (ScheduleEntry(f"w_{user}_a", lo, mid - 1),
                                 ScheduleEntry(f"w_{user}_b", mid, hi))
                place(f"w_{user}_a", w_off, w_off)
                place(f"w_{user}_b", -w_off, w_off)
            else:
                work_schedule = (ScheduleEntry(f"w_{user}", lo, hi),)
                place(f"w_{user}", w_off, w_off)

        for role in (_L, _A, _E):
            place(f"{role[0]}_{user}", float(rng.uniform(0.02, 0.05)),
                  float(-rng.uniform(0.02, 0.05)))

        missing = float(rng.uniform(cfg.missing_min, cfg.missing_max))
        specs.append(AgentSpec(
            user_id=user,
            home_schedule=home_schedule,
            work_schedule=work_schedule,
            profile_mix=mix_employed if employed else mix_unemployed,
            missing_rate=missing,
            seed=_agent_seed(cfg.seed, i),
        ))
    return specs, coords, region_by_user
