"""Home and work location detection from stop-location sequences.

The package bundles the sliding-window detector, the Atlas and TimeGeo
baselines, evaluation metrics with bootstrap errors, behavioural-profile
clustering, a synthetic ground-truth generator, downstream applications
(employment rates, commuting distances), and a privacy-preserving stop
anonymizer. See the ``howde`` command line for the batch surface.
"""

from .anonymize import anonymize, anonymize_frame
from .apps import (
    CommuteReport,
    ComparisonResult,
    EmploymentReport,
    LocationCoords,
    commute_stats,
    compare_to_reference,
    employment_rate,
    haversine,
)
from .baselines import (
    BaselineResult,
    atlas_home,
    atlas_work,
    run_baseline,
    timegeo_home,
    timegeo_work,
)
from .binning import bin_hours, day_features
from .config import RunConfig, build_run_config, load_config_file, params_from_mapping
from .detector import (
    WindowAggregate,
    build_window,
    detect_home,
    detect_work,
    run_howde,
)
from .metrics import (
    EvalReport,
    Granularity,
    GroundTruth,
    ProtocolError,
    evaluate,
    evaluate_baseline,
    evaluate_daily,
    prefilter_users,
    weekly_label,
    weekly_labels,
)
from .model import (
    ConfigError,
    DayFeature,
    DetectionLabel,
    HourlyDay,
    HowdeError,
    HowdeParams,
    IngestionError,
    OverlappingStopsError,
    Scope,
    StopRecord,
    TimeWindows,
    UndetectedReason,
    WindowMode,
)
from .pipeline import (
    baseline_frame,
    detect_frame,
    evaluate_frame,
    prefilter_frame,
    sweep_frames,
    synth_frames,
)
from .profiles import (
    ClusterModel,
    DaySequence,
    elbow_from_costs,
    elbow_k,
    encode_days,
    entropy_null,
    kmodes,
    profile_entropy,
)
from .reference import run_howde_reference
from .synth import (
    AgentSpec,
    AgentTruth,
    PopulationConfig,
    ScheduleEntry,
    build_agents,
    generate,
    population_truth,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
