"""Reinforced decision trees."""

from ._rdt import (
    Dataset,
    DivergenceError,
    IoError,
    MalformedFileError,
    RdtModel,
    TrainConfig,
    TrainLog,
    TreeTooLargeError,
    TreeTopology,
    accuracy,
    build_complete_tree,
    check_report_consistency,
    child_distribution,
    class_prior_code,
    enumerate_paths,
    exact_gradient,
    exact_objective,
    frontier_grid,
    generate_gaussian_dataset,
    init_model,
    load_dataset,
    load_model,
    make_random_tree,
    predict,
    run_experiment,
    sampled_gradient,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
