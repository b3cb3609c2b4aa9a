"""Factored gradient descent for low-rank matrix estimation."""

from ._lowrank import (
    BinaryEntries,
    ExperimentConfig,
    LinearMeasurements,
    SampledEntries,
    balance_penalty,
    balanced_split,
    gen_completion,
    gen_ground_truth,
    gen_onebit,
    gen_regression,
    gradient,
    initialize,
    link_bounds,
    loss,
    procrustes_align,
    project_row_norm,
    rank_r_truncate,
    run_experiment,
    run_gd,
)

__all__ = [
    "BinaryEntries",
    "ExperimentConfig",
    "LinearMeasurements",
    "SampledEntries",
    "balance_penalty",
    "balanced_split",
    "gen_completion",
    "gen_ground_truth",
    "gen_onebit",
    "gen_regression",
    "gradient",
    "initialize",
    "link_bounds",
    "loss",
    "procrustes_align",
    "project_row_norm",
    "rank_r_truncate",
    "run_experiment",
    "run_gd",
]
