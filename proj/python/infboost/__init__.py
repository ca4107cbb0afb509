"""Gradient boosting, InfiniteBoost and random forests over regression trees."""

from ._core import (
    ConfigError,
    DataError,
    Dataset,
    DecisionTree,
    Ensemble,
    NumericError,
    __version__,
    convergence_trace,
    evaluate_metric,
    fit_tree,
    fixed_point_residual,
    load_csv,
    load_libsvm,
    loss_value,
    mse,
    negative_gradient,
    roc_auc,
    split_holdout,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DecisionTree",
    "Ensemble",
    "NumericError",
    "__version__",
    "convergence_trace",
    "evaluate_metric",
    "fit_tree",
    "fixed_point_residual",
    "load_csv",
    "load_libsvm",
    "loss_value",
    "mse",
    "negative_gradient",
    "roc_auc",
    "split_holdout",
    "train",
]
