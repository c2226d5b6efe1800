"""Seeded experiment harness: configs, the optimization loop, reports."""

from ccsopt.harness.config import ExperimentConfig, PRESETS, load_config, make_config
from ccsopt.harness.loop import (
    IterationRecord,
    Problem,
    TrialLog,
    make_problem,
    read_trial_log,
    run_experiment,
    run_random_baseline,
    write_trial_log,
)
from ccsopt.harness.report import (
    best_by_objective,
    final_front,
    load_logs,
    pooled_points,
    summarize_trials,
    write_report,
)

__all__ = [
    "ExperimentConfig",
    "IterationRecord",
    "PRESETS",
    "Problem",
    "TrialLog",
    "best_by_objective",
    "final_front",
    "load_config",
    "load_logs",
    "make_config",
    "make_problem",
    "pooled_points",
    "read_trial_log",
    "run_experiment",
    "run_random_baseline",
    "summarize_trials",
    "write_report",
    "write_trial_log",
]
