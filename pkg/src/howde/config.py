"""Run configuration: flat key=value files with flag overrides.

Keys use the canonical parameter names (delta_T_H, C_hours, f_days_W, ...).
Unknown keys are rejected before any computation starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import ConfigError, HowdeParams, TimeWindows, WindowMode

PARAM_KEYS = (
    "delta_T_H", "delta_T_W",
    "C_hours", "C_days_H", "C_days_W",
    "f_hours_H", "f_hours_W", "f_days_W",
    "window_mode", "night_bins", "business_bins", "business_days",
)
RUN_KEYS = (
    "input", "output", "detector", "protocol",
    "bootstrap_B", "seed", "prefilter_days",
)

DETECTORS = ("howde", "atlas", "timegeo")
PROTOCOLS = ("user_week", "user")


def parse_bins(text: str, limit: int = 24) -> frozenset:
    """Parse hour or weekday sets like ``0-5`` or ``0,1,2,8-10``."""
    values: set = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            values.update(range(int(lo), int(hi) + 1))
        else:
            values.add(int(part))
    if not values or any(v < 0 or v >= limit for v in values):
        raise ConfigError(f"bin set {text!r} not within 0..{limit - 1}")
    return frozenset(values)


def load_config_file(path) -> dict:
    """Read a flat key=value file; '#' starts a comment."""
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def params_from_mapping(values) -> HowdeParams:
    """Build detection parameters from (possibly string-typed) values."""
    unknown = set(values) - set(PARAM_KEYS)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
    kwargs: dict = {}
    for key in ("delta_T_H", "delta_T_W"):
        if key in values:
            kwargs[key] = int(values[key])
    for key in ("C_hours", "C_days_H", "C_days_W", "f_hours_H", "f_hours_W", "f_days_W"):
        if key in values:
            kwargs[key] = float(values[key])
    if "window_mode" in values:
        raw = values["window_mode"]
        try:
            kwargs["window_mode"] = raw if isinstance(raw, WindowMode) else WindowMode(str(raw))
        except ValueError:
            raise ConfigError(
                f"window_mode must be one of {[m.value for m in WindowMode]}, got {raw!r}"
            ) from None
    window_kwargs = {}
    if "night_bins" in values:
        window_kwargs["night_bins"] = parse_bins(values["night_bins"], 24)
    if "business_bins" in values:
        window_kwargs["business_bins"] = parse_bins(values["business_bins"], 24)
    if "business_days" in values:
        window_kwargs["business_days"] = parse_bins(values["business_days"], 7)
    if window_kwargs:
        kwargs["windows"] = TimeWindows(**window_kwargs)
    return HowdeParams(**kwargs)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for a detection/evaluation run."""

    params: HowdeParams = field(default_factory=HowdeParams)
    input: str | None = None
    output: str | None = None
    detector: str = "howde"
    protocol: str = "user_week"
    bootstrap_B: int = 1000
    seed: int = 0
    prefilter_days: int = 0

    def __post_init__(self) -> None:
        if self.detector not in DETECTORS:
            raise ConfigError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.bootstrap_B < 0 or self.prefilter_days < 0:
            raise ConfigError("bootstrap_B and prefilter_days must be non-negative")


def build_run_config(file_values=None, overrides=None) -> RunConfig:
    """Merge config-file values with flag overrides (overrides win)."""
    merged: dict = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if value is not None:
                merged[key] = value
    unknown = set(merged) - set(PARAM_KEYS) - set(RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    params = params_from_mapping({k: v for k, v in merged.items() if k in PARAM_KEYS})
    run = {k: v for k, v in merged.items() if k in RUN_KEYS}
    if "bootstrap_B" in run:
        run["bootstrap_B"] = int(run["bootstrap_B"])
    if "seed" in run:
        run["seed"] = int(run["seed"])
    if "prefilter_days" in run:
        run["prefilter_days"] = int(run["prefilter_days"])
    return RunConfig(params=params, **run)
