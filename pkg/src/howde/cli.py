"""Command-line interface.

Subcommands: detect, baseline, evaluate, sweep, profiles, entropy, synth,
anonymize, apps. A flat key=value config file can seed detect/sweep
parameters; explicit flags override file values. Exit code 0 on success,
2 with a diagnostic on validation failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import pandas as pd

from . import io, pipeline
from .anonymize import anonymize_frame
from .apps import commute_stats, compare_to_reference, employment_rate
from .binning import bin_hours
from .config import (
    DETECTORS,
    PROTOCOLS,
    build_run_config,
    load_config_file,
    params_from_mapping,
)
from .metrics import Granularity
from .model import ConfigError, HowdeError, Scope, WindowMode
from .profiles import elbow_k, encode_days, kmodes, mean_user_entropy, entropy_null
from .synth import PopulationConfig, population_truth
from .pipeline import synth_population

_PARAM_FLAGS = (
    ("--delta-T-H", "delta_T_H", int),
    ("--delta-T-W", "delta_T_W", int),
    ("--C-hours", "C_hours", float),
    ("--C-days-H", "C_days_H", float),
    ("--C-days-W", "C_days_W", float),
    ("--f-hours-H", "f_hours_H", float),
    ("--f-hours-W", "f_hours_W", float),
    ("--f-days-W", "f_days_W", float),
)
_PARAM_TYPES = {name: typ for _, name, typ in _PARAM_FLAGS}
_PARAM_TYPES["window_mode"] = str


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    for flag, dest, typ in _PARAM_FLAGS:
        p.add_argument(flag, dest=dest, type=typ, default=None)
    p.add_argument("--window-mode", dest="window_mode", default=None,
                   choices=[m.value for m in WindowMode])
    p.add_argument("--night-bins", dest="night_bins", default=None)
    p.add_argument("--business-bins", dest="business_bins", default=None)
    p.add_argument("--business-days", dest="business_days", default=None)


def _config_overrides(args, extra=()) -> dict:
    keys = [dest for _, dest, _ in _PARAM_FLAGS]
    keys += ["window_mode", "night_bins", "business_bins", "business_days"]
    keys += list(extra)
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _scope(value: str) -> Scope:
    return Scope.HOME if value == "home" else Scope.WORK


def _granularity(value: str) -> Granularity:
    return Granularity.USER_WEEK if value == "user_week" else Granularity.USER


def cmd_detect(args) -> int:
    file_values = load_config_file(args.config) if args.config else None
    overrides = _config_overrides(
        args, extra=["input", "output", "detector", "seed", "prefilter_days"])
    cfg = build_run_config(file_values, overrides)
    if not cfg.input or not cfg.output:
        raise ConfigError("detect needs --input and --output (flag or config)")
    stops = io.read_stops(cfg.input)
    stops = pipeline.prefilter_frame(stops, cfg.prefilter_days)
    if cfg.detector == "howde":
        labels = pipeline.detect_frame(stops, cfg.params)
        io.write_labels(labels, cfg.output)
    else:
        coords = io.read_coords(args.coords) if args.coords else None
        result = pipeline.baseline_frame(stops, cfg.detector, coords=coords,
                                         harmonized=args.harmonized)
        result.to_csv(cfg.output, index=False, lineterminator="\n")
    print(f"wrote {cfg.output}")
    return 0


def cmd_baseline(args) -> int:
    stops = io.read_stops(args.input)
    stops = pipeline.prefilter_frame(stops, args.prefilter_days)
    coords = io.read_coords(args.coords) if args.coords else None
    result = pipeline.baseline_frame(stops, args.method, coords=coords,
                                     harmonized=args.harmonized)
    result.to_csv(args.output, index=False, lineterminator="\n")
    print(f"wrote {args.output}")
    return 0


def _print_report(report, scope: str, protocol: str) -> None:
    print(f"scope={scope} protocol={protocol} "
          f"n_truth={report.n_truth} n_detected={report.n_detected} "
          f"n_matched={report.n_matched}")
    print(f"detected_accuracy={report.detected_accuracy:.6f} "
          f"stderr={report.acc_stderr:.6f} "
          f"ci95=[{report.acc_ci[0]:.6f},{report.acc_ci[1]:.6f}]")
    print(f"frac_not_detected={report.frac_not_detected:.6f} "
          f"stderr={report.fnd_stderr:.6f} "
          f"ci95=[{report.fnd_ci[0]:.6f},{report.fnd_ci[1]:.6f}]")


def cmd_evaluate(args) -> int:
    labels = pd.read_csv(args.labels, dtype=str, keep_default_na=False)
    truth = io.read_truth(args.truth, _scope(args.scope), _granularity(args.protocol))
    report = pipeline.evaluate_frame(labels, truth, bootstrap_b=args.bootstrap_B,
                                     seed=args.seed)
    _print_report(report, args.scope, args.protocol)
    if args.report:
        payload = pipeline.report_record(report, args.scope, args.protocol)
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {args.report}")
    return 0


def cmd_sweep(args) -> int:
    file_values = load_config_file(args.config) if args.config else None
    overrides = _config_overrides(args, extra=["input", "seed"])
    cfg = build_run_config(file_values, overrides)
    if not cfg.input:
        raise ConfigError("sweep needs --input (flag or config)")

    grid: dict = {}
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects NAME=v1,v2,..., got {item!r}")
        name, raw = item.split("=", 1)
        name = name.strip()
        if name not in _PARAM_TYPES:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        typ = _PARAM_TYPES[name]
        grid[name] = [typ(v) for v in raw.split(",") if v]
    if not grid:
        raise ConfigError("sweep needs at least one --param NAME=v1,v2,...")

    stops = io.read_stops(cfg.input)
    stops = pipeline.prefilter_frame(stops, cfg.prefilter_days)
    granularity = _granularity(cfg.protocol)
    scopes = [Scope.HOME, Scope.WORK] if args.scope == "both" else [_scope(args.scope)]
    truth_by_scope = {s: io.read_truth(args.truth, s, granularity) for s in scopes}
    table = pipeline.sweep_frames(stops, truth_by_scope, cfg.params, grid,
                                  bootstrap_b=cfg.bootstrap_B, seed=cfg.seed)
    table.to_csv(args.output, index=False, lineterminator="\n")
    print(f"wrote {args.output} ({len(table)} rows)")
    return 0


def cmd_profiles(args) -> int:
    stops = io.read_stops(args.input)
    scope = _scope(args.scope)
    if args.targets:
        targets = io.read_user_map(args.targets, "loc_id")
    else:
        truth = io.read_truth(args.truth, scope, Granularity.USER)
        targets = {user: sorted(locs)[0] for user, locs in truth.entries.items()}

    sequences = []
    for user_id, group in stops.groupby("user_id", sort=True):
        target = targets.get(str(user_id))
        if target is None:
            continue
        days = bin_hours(io.stop_records(group))
        if args.weekdays_only:
            days = [d for d in days if d.date.weekday() < 5]
        sequences.extend(encode_days(days, target, scope))
    if not sequences:
        raise HowdeError("no day sequences to cluster (check targets)")

    if args.k:
        k = args.k
    else:
        lo, hi = (int(x) for x in args.k_range.split("-", 1))
        k = elbow_k(sequences, range(lo, hi + 1), seed=args.seed)
    model = kmodes(sequences, k, seed=args.seed)

    assignments = pd.DataFrame({
        "user_id": [s.user_id for s in sequences],
        "date": [str(s.date) for s in sequences],
        "cluster": model.labels,
    })
    assignments.to_csv(args.assignments_out, index=False, lineterminator="\n")

    sizes = model.sizes()
    clusters = pd.DataFrame({
        "cluster": np.arange(model.k),
        "size_fraction": sizes / sizes.sum(),
        "mode": [model.mode_string(c) for c in range(model.k)],
    })
    clusters.to_csv(args.clusters_out, index=False, lineterminator="\n")
    print(f"k={model.k} cost={model.cost}")
    for row in clusters.itertuples(index=False):
        print(f"cluster {row.cluster}: size={row.size_fraction:.4f} mode={row.mode}")
    return 0


def cmd_entropy(args) -> int:
    df = pd.read_csv(args.assignments, dtype={"user_id": str, "cluster": int})
    labels_by_user = {str(u): g["cluster"].to_numpy()
                      for u, g in df.groupby("user_id", sort=True)}
    k = args.k or int(df["cluster"].max()) + 1
    from .profiles import profile_entropy

    rows = [(u, len(labels), profile_entropy(np.bincount(labels, minlength=k), k))
            for u, labels in labels_by_user.items()]
    out = pd.DataFrame(rows, columns=["user_id", "n_days", "entropy"])
    if args.output:
        out.to_csv(args.output, index=False, lineterminator="\n")
    mean = mean_user_entropy(labels_by_user, k)
    stderr = float(out["entropy"].std(ddof=1) / np.sqrt(len(out))) if len(out) > 1 else float("nan")
    null = entropy_null(labels_by_user, k, seed=args.seed, repetitions=args.null_reps)
    print(f"k={k} users={len(out)} mean_entropy={mean:.6f} stderr={stderr:.6f} "
          f"null_mean={null:.6f} (R={args.null_reps})")
    return 0


def cmd_synth(args) -> int:
    from .synth import population_from_mapping

    values = load_config_file(args.config) if args.config else {}
    for key in ("agents", "days", "seed"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    if args.missing is not None:
        if ":" in args.missing:
            lo, hi = args.missing.split(":", 1)
            values["missing_min"], values["missing_max"] = lo, hi
        else:
            values["missing_min"] = values["missing_max"] = args.missing
    cfg = population_from_mapping(values)

    chunks, truths, coords, region_by_user = synth_population(cfg)
    first = True
    n_rows = 0
    for chunk in chunks:
        chunk.to_csv(args.output_stops, index=False, mode="w" if first else "a",
                     header=first, lineterminator="\n")
        n_rows += len(chunk)
        first = False
    print(f"wrote {args.output_stops} ({n_rows} stops, {cfg.agents} agents)")

    if args.output_truth:
        tables = [population_truth(truths, scope, gran)
                  for scope in (Scope.HOME, Scope.WORK)
                  for gran in (Granularity.USER_WEEK, Granularity.USER)]
        io.write_truth(tables, args.output_truth)
        print(f"wrote {args.output_truth}")
    if args.output_coords:
        io.write_coords(coords, args.output_coords)
        print(f"wrote {args.output_coords}")
    if args.output_users:
        users = pipeline.users_frame(region_by_user)
        users.to_csv(args.output_users, index=False, lineterminator="\n")
        print(f"wrote {args.output_users}")
    return 0


def cmd_anonymize(args) -> int:
    stops = io.read_stops(args.input)
    out = anonymize_frame(stops, seed=args.seed)
    io.write_stops(out, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_apps_employment(args) -> int:
    labels = io.detection_labels(io.read_labels(args.labels))
    regions = io.read_user_map(args.regions, "region_id")
    report = employment_rate(labels, regions, min_stable_days=args.min_stable_days,
                             min_users=args.min_users)
    rows = [(r.region_id, r.rate, r.n_users, r.n_employed)
            for r in report.by_region.values()]
    table = pd.DataFrame(rows, columns=["region_id", "employment_rate",
                                        "n_users", "n_employed"])
    table.to_csv(args.output, index=False, lineterminator="\n")
    print(f"wrote {args.output} ({len(table)} regions, "
          f"{report.n_users_without_region} users without region)")
    if args.reference:
        reference = io.read_reference(args.reference)
        estimates = {r.region_id: r.rate for r in report.by_region.values()}
        cmp = compare_to_reference(estimates, reference)
        print(f"pearson_r={cmp.pearson_r:.6f} "
              f"mean_relative_error={cmp.mean_relative_error:.6f} "
              f"n_overlap={cmp.n_overlap} zero_ref_excluded={cmp.n_zero_reference_excluded}")
    return 0


def cmd_apps_commute(args) -> int:
    labels = io.detection_labels(io.read_labels(args.labels))
    coords = io.read_coords(args.coords)
    groups = io.read_user_map(args.groups, "group_id")
    report = commute_stats(labels, coords, groups)
    rows = [(g.group_id, g.mean_km, g.stderr_km, g.n_users)
            for g in report.by_group.values()]
    table = pd.DataFrame(rows, columns=["group_id", "mean_km", "stderr_km", "n_users"])
    table.to_csv(args.output, index=False, lineterminator="\n")
    print(f"wrote {args.output} ({len(table)} groups, "
          f"{report.n_days_skipped} days skipped for missing coordinates)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="howde",
        description="Home and work location detection from stop-location data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run a detector over a stops CSV")
    p.add_argument("--config")
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--detector", choices=DETECTORS, default=None)
    p.add_argument("--coords", help="coordinates CSV (timegeo work distances)")
    p.add_argument("--harmonized", action="store_true",
                   help="use shared night/business windows for baselines")
    p.add_argument("--prefilter-days", dest="prefilter_days", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_param_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("baseline", help="run a baseline method")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=("atlas", "timegeo"), required=True)
    p.add_argument("--coords")
    p.add_argument("--harmonized", action="store_true")
    p.add_argument("--prefilter-days", dest="prefilter_days", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="score labels against ground truth")
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--scope", choices=("home", "work"), required=True)
    p.add_argument("--protocol", choices=PROTOCOLS, default="user_week")
    p.add_argument("--bootstrap-B", dest="bootstrap_B", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid sweep over parameter lists")
    p.add_argument("--config")
    p.add_argument("--input")
    p.add_argument("--truth", required=True)
    p.add_argument("--scope", choices=("home", "work", "both"), default="both")
    p.add_argument("--output", required=True)
    p.add_argument("--param", action="append",
                   help="NAME=v1,v2,... (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    _add_param_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("profiles", help="cluster day sequences into profiles")
    p.add_argument("--input", required=True)
    p.add_argument("--scope", choices=("home", "work"), required=True)
    p.add_argument("--targets", help="CSV user_id,loc_id with target locations")
    p.add_argument("--truth", help="ground-truth CSV (user granularity)")
    p.add_argument("--k", type=int)
    p.add_argument("--k-range", dest="k_range", default="1-8")
    p.add_argument("--weekdays-only", dest="weekdays_only", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assignments-out", dest="assignments_out", required=True)
    p.add_argument("--clusters-out", dest="clusters_out", required=True)
    p.set_defaults(func=cmd_profiles)

    p = sub.add_parser("entropy", help="per-user profile entropy and null model")
    p.add_argument("--assignments", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--null-reps", dest="null_reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("synth", help="generate a synthetic population")
    p.add_argument("--config", help="population config (key=value)")
    p.add_argument("--agents", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--missing", help="rate or min:max range")
    p.add_argument("--output-stops", dest="output_stops", required=True)
    p.add_argument("--output-truth", dest="output_truth")
    p.add_argument("--output-coords", dest="output_coords")
    p.add_argument("--output-users", dest="output_users")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("anonymize", help="privacy-preserving stop transformation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("apps", help="downstream applications")
    apps_sub = p.add_subparsers(dest="app", required=True)

    q = apps_sub.add_parser("employment", help="regional employment rates")
    q.add_argument("--labels", required=True)
    q.add_argument("--regions", required=True, help="CSV user_id,region_id")
    q.add_argument("--min-stable-days", dest="min_stable_days", type=int, default=30)
    q.add_argument("--min-users", dest="min_users", type=int, default=0)
    q.add_argument("--reference", help="CSV region_id,value")
    q.add_argument("--output", required=True)
    q.set_defaults(func=cmd_apps_employment)

    q = apps_sub.add_parser("commute", help="home-work commuting distances")
    q.add_argument("--labels", required=True)
    q.add_argument("--coords", required=True)
    q.add_argument("--groups", required=True, help="CSV user_id,group_id")
    q.add_argument("--output", required=True)
    q.set_defaults(func=cmd_apps_commute)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HowdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
