"""Deterministic conveyor-belt pick-and-place simulation and strategy tools.

The package simulates a line of overhead robots picking objects from a moving
belt, scores per-robot dispatching rules against sampled object patterns, and
searches for good rule assignments. A small line-oriented JSON protocol exposes
episodes to external controllers (see `beltsort.bridge`).
"""

from .bench import (
    CompareResult,
    NoFeasibleSpeedError,
    all_picked,
    benefit_pct,
    compare,
    export_plot_data,
    feasibility_profile,
    load_plot_data,
    max_belt_speed,
    parse_controller,
    rows_to_long,
    run_controller,
)
from .bridge import BridgeClient, BridgeError, BridgeSession, build_obs, obs_width, serve
from .config import (
    ConfigError,
    RobotSpec,
    WorldConfig,
    default_config,
    load_config,
    save_config,
    validate_config,
)
from .kinematics import intercept_tau, plan_intercept, rest_reach_window
from .patterns import (
    AttributeRanges,
    Pattern,
    PatternError,
    PatternObject,
    PatternSpec,
    load_pattern,
    pattern_from_dict,
    pattern_to_dict,
    sample_grid,
    sample_pattern,
    sample_poisson_disk,
    save_pattern,
)
from .presets import (
    EVAL4,
    eval4_patterns,
    eval4_specs,
    named_pattern_spec,
    preset_patterns,
    robust_combo,
)
from .rules import Rule, RULES, apply_rule, combo_controller, combo_name, parse_combo
from .search import (
    EvalReport,
    GraspResult,
    GreedyGtResult,
    exhaustive_best_picks,
    grasp_search,
    greedy_gt,
    monte_carlo_eval,
    weighted_rate_per_minute,
)
from .sim import (
    CandidateFeature,
    Controller,
    DecisionRequest,
    Episode,
    EpisodeStats,
    NotACandidateError,
    PnPTask,
    RobotBusyError,
    SimDoneError,
    SimError,
    WasteObject,
    events_to_jsonl,
    reward_of,
    run_episode,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeRanges",
    "BridgeClient",
    "BridgeError",
    "BridgeSession",
    "CandidateFeature",
    "CompareResult",
    "ConfigError",
    "Controller",
    "DecisionRequest",
    "EVAL4",
    "Episode",
    "EpisodeStats",
    "EvalReport",
    "GraspResult",
    "GreedyGtResult",
    "NoFeasibleSpeedError",
    "NotACandidateError",
    "Pattern",
    "PatternError",
    "PatternObject",
    "PatternSpec",
    "PnPTask",
    "RobotBusyError",
    "RobotSpec",
    "Rule",
    "RULES",
    "SimDoneError",
    "SimError",
    "WasteObject",
    "WorldConfig",
    "all_picked",
    "apply_rule",
    "benefit_pct",
    "build_obs",
    "combo_controller",
    "combo_name",
    "compare",
    "default_config",
    "eval4_patterns",
    "eval4_specs",
    "events_to_jsonl",
    "exhaustive_best_picks",
    "export_plot_data",
    "feasibility_profile",
    "grasp_search",
    "greedy_gt",
    "intercept_tau",
    "load_config",
    "load_plot_data",
    "load_pattern",
    "max_belt_speed",
    "monte_carlo_eval",
    "named_pattern_spec",
    "obs_width",
    "parse_combo",
    "parse_controller",
    "pattern_from_dict",
    "pattern_to_dict",
    "plan_intercept",
    "preset_patterns",
    "rest_reach_window",
    "reward_of",
    "robust_combo",
    "rows_to_long",
    "run_controller",
    "run_episode",
    "sample_grid",
    "sample_pattern",
    "sample_poisson_disk",
    "save_config",
    "save_pattern",
    "serve",
    "validate_config",
    "weighted_rate_per_minute",
]
