"""Tabular facade over the howde engine. No logic lives here."""

from __future__ import annotations

from dataclasses import dataclass

import pandas as pd

from howde import io, pipeline
from howde.anonymize import anonymize_frame
from howde.config import params_from_mapping
from howde.metrics import Granularity
from howde.model import HowdeParams, IngestionError, Scope
from howde.synth import population_from_mapping, population_truth


def _as_scope(value) -> Scope:
    if isinstance(value, Scope):
        return value
    return Scope(str(value).lower())


def _as_granularity(value) -> Granularity:
    if isinstance(value, Granularity):
        return value
    return Granularity(str(value).lower())


def detect(stops: pd.DataFrame, params: dict | HowdeParams | None = None,
           threads: int | None = None) -> pd.DataFrame:
    """Daily detection labels for a stops table.

    ``stops`` must carry the stops CSV columns (user_id, loc_id, start,
    end[, utc_offset_minutes]); timestamps may be epoch seconds or
    ISO-8601 strings. ``params`` is a mapping of the canonical parameter
    names; unknown keys are rejected. Rows equal a ``howde detect`` run
    on the same data.
    """
    if not isinstance(stops, pd.DataFrame):
        raise IngestionError("stops must be a pandas DataFrame")
    if isinstance(params, HowdeParams):
        resolved = params
    else:
        resolved = params_from_mapping(dict(params or {}))
    normalized = io.normalize_stops(stops)
    return pipeline.detect_frame(normalized, resolved, threads=threads)


def evaluate(labels: pd.DataFrame, truth: pd.DataFrame, protocol: str,
             scope: str, bootstrap_b: int = 1000, seed: int = 0) -> dict:
    """Score a labels table against a truth table.

    ``labels`` uses the daily labels schema (or the static baseline
    schema); ``truth`` the ground-truth CSV schema. Returns the same
    record ``howde evaluate --report`` writes. A truth table with no rows
    for the requested scope/protocol is a protocol mismatch.
    """
    scope_v = _as_scope(scope)
    granularity = _as_granularity(protocol)
    table = io.truth_from_frame(truth.astype(str), scope_v, granularity)
    if not table.entries:
        raise IngestionError(
            f"truth table has no entries for scope={scope_v.value} "
            f"protocol={granularity.value}")
    report = pipeline.evaluate_frame(labels, table, bootstrap_b=bootstrap_b,
                                     seed=seed)
    return pipeline.report_record(report, scope_v.value, granularity.value)


def anonymize(stops: pd.DataFrame, seed: int = 0) -> pd.DataFrame:
    """Privacy-preserving transformation of a stops table."""
    normalized = io.normalize_stops(stops)
    return anonymize_frame(normalized, seed=seed)


@dataclass(frozen=True)
class SynthResult:
    stops: pd.DataFrame
    truth: pd.DataFrame
    coords: pd.DataFrame
    users: pd.DataFrame


def synth(config: dict) -> SynthResult:
    """Generate a synthetic population from population-config values.

    Tables match the files ``howde synth`` writes for the same config.
    """
    cfg = population_from_mapping(dict(config))
    chunks, truths, coords, region_by_user = pipeline.synth_population(cfg)
    stops = pd.concat(list(chunks), ignore_index=True)
    tables = [population_truth(truths, scope, gran)
              for scope in (Scope.HOME, Scope.WORK)
              for gran in (Granularity.USER_WEEK, Granularity.USER)]
    return SynthResult(
        stops=stops,
        truth=io.truth_frame(tables),
        coords=io.coords_frame(coords),
        users=pipeline.users_frame(region_by_user),
    )
