"""Fairness-regularized low-rank fine-tuning: deterministic numeric core.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its operations.
"""

from ._core import (
    DataError,
    NumericError,
    count_trainable,
    eod_max,
    eod_one_vs_all,
    eod_pair,
    fair_objective,
    fid,
    gaussian_sample,
    group_loss_variance,
    matmul,
    mean_and_covariance,
    metrics_summary,
    psd_sqrt,
    rng_algorithm,
    run_cli,
    variance_penalty,
)

__all__ = [
    "DataError",
    "NumericError",
    "count_trainable",
    "eod_max",
    "eod_one_vs_all",
    "eod_pair",
    "fair_objective",
    "fid",
    "gaussian_sample",
    "group_loss_variance",
    "matmul",
    "mean_and_covariance",
    "metrics_summary",
    "psd_sqrt",
    "rng_algorithm",
    "run_cli",
    "variance_penalty",
]
