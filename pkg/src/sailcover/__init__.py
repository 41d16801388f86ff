"""Coverage mission simulator and planner for an autonomous sailboat."""

from .baseline import run_baseline, serpentine_plan
from .coverage import CoverageRaster, disk_template, read_pgm, redundancy_percent, redundancy_score, write_pgm
from .env import (
    EnvState,
    FieldBounds,
    FlowField,
    ForecastSequence,
    GridSpec,
    advance_to_stage,
    clone_env,
    dump_fields_csv,
    generate_scalar_field,
    generate_stage_fields,
    make_forecast,
)
from .kinematics import (
    ACTIONS,
    ACTION_BY_ID,
    ACTION_BY_OFFSET,
    ActionSpec,
    TraversalResult,
    actual_speed,
    decompose_track,
    effective_speed,
    evaluate_action,
    traverse,
)
from .harness import (
    BatchSummary,
    ConfigError,
    HarnessConfig,
    MethodStats,
    RunRecord,
    config_digest,
    load_config,
    parse_method,
    parse_seeds,
    run_batch,
    run_experiment,
)
from .mission import MissionResult, TraceRow, curve_points, read_trace_csv, write_trace_csv
from .morphology import (
    MorphologyReport,
    connected_components,
    convexity_score,
    region_report,
    shape_score,
    would_split_uncovered,
)
from .planner import PlannerConfig, plan_phase, run_mcts
from .polar import PolarTable, default_polar, load_polar_csv, save_polar_csv
from .scoring import ScoreParams, heuristic_score, position_weights, rollout_reward

__version__ = "0.1.0"

__all__ = [
    "ACTIONS",
    "ACTION_BY_ID",
    "ACTION_BY_OFFSET",
    "ActionSpec",
    "BatchSummary",
    "ConfigError",
    "CoverageRaster",
    "EnvState",
    "FieldBounds",
    "FlowField",
    "ForecastSequence",
    "GridSpec",
    "HarnessConfig",
    "MethodStats",
    "MissionResult",
    "MorphologyReport",
    "PlannerConfig",
    "PolarTable",
    "RunRecord",
    "ScoreParams",
    "TraceRow",
    "TraversalResult",
    "actual_speed",
    "advance_to_stage",
    "clone_env",
    "config_digest",
    "connected_components",
    "convexity_score",
    "curve_points",
    "decompose_track",
    "default_polar",
    "disk_template",
    "dump_fields_csv",
    "effective_speed",
    "evaluate_action",
    "generate_scalar_field",
    "generate_stage_fields",
    "heuristic_score",
    "load_config",
    "load_polar_csv",
    "make_forecast",
    "parse_method",
    "parse_seeds",
    "plan_phase",
    "position_weights",
    "read_pgm",
    "read_trace_csv",
    "redundancy_percent",
    "redundancy_score",
    "region_report",
    "rollout_reward",
    "run_baseline",
    "run_batch",
    "run_experiment",
    "run_mcts",
    "save_polar_csv",
    "serpentine_plan",
    "shape_score",
    "traverse",
    "would_split_uncovered",
    "write_pgm",
]
