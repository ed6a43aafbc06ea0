"""
Metrics Service
RMSE / R² on yield fractions and fold aggregation.
"""

import math
from collections.abc import Sequence

import numpy as np
from models.report import AggregateMetrics, Metrics

from .evaluation_exceptions import (
    DegenerateActualError,
    EmptyMetricInputError,
    MetricLengthMismatchError,
)

YIELD_SCALE = 100.0


def _pair(pred: Sequence[float], actual: Sequence[float]):
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise MetricLengthMismatchError(
            f"{pred.size} predictions vs {actual.size} targets"
        )
    if pred.size == 0:
        raise EmptyMetricInputError("Metric over no values")
    return pred, actual


def rmse(pred: Sequence[float], actual: Sequence[float]) -> float:
    """Root mean squared error in fraction units (report with ``* 100``)"""
    pred, actual = _pair(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def r_squared(pred: Sequence[float], actual: Sequence[float]) -> float:
    """1 - SS_res / SS_tot"""
    pred, actual = _pair(pred, actual)
    if pred.size < 2:
        raise DegenerateActualError("R² needs at least two values")
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateActualError("Actual values have zero variance")
    ss_res = float(np.sum((pred - actual) ** 2))
    return 1.0 - ss_res / ss_tot


def compute_metrics(pred: Sequence[float], actual: Sequence[float]) -> Metrics:
    return Metrics(
        rmse=rmse(pred, actual) * YIELD_SCALE, r2=r_squared(pred, actual)
    )


def _mean_std(values: list[float]) -> tuple[float, float]:
    """Correctly rounded sums, so the result ignores fold order"""
    mean = math.fsum(values) / len(values)
    variance = math.fsum((value - mean) ** 2 for value in values) / len(values)
    return mean, math.sqrt(variance)


def aggregate(fold_metrics: Sequence[Metrics]) -> AggregateMetrics:
    """Mean ± population std of each metric across folds"""
    if not fold_metrics:
        raise EmptyMetricInputError("No fold metrics to aggregate")
    rmse_mean, rmse_std = _mean_std([m.rmse for m in fold_metrics])
    r2_mean, r2_std = _mean_std([m.r2 for m in fold_metrics])
    return AggregateMetrics(
        rmse_mean=rmse_mean,
        rmse_std=rmse_std,
        r2_mean=r2_mean,
        r2_std=r2_std,
        n_folds=len(fold_metrics),
    )
