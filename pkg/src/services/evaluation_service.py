import logging
from typing import Tuple

import numpy as np

from models.training_entities import EvalReport
from utils.errors import LengthMismatch, TooShort, ZeroDenominator

logger = logging.getLogger(__name__)


def _aligned(actual, predicted, min_length: int) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.shape != p.shape:
        raise LengthMismatch(f"Actual has {a.size} points, predicted has {p.size}")
    if a.size < min_length:
        raise TooShort(f"Metric needs at least {min_length} points, got {a.size}")
    return a, p


def trends(series) -> np.ndarray:
    """Up (1) / down (0) label per step; a flat step keeps the previous label, starting from 0."""
    diffs = np.diff(np.asarray(series, dtype=np.float64))
    out = np.zeros(diffs.size, dtype=np.int8)
    current = 0
    for t, d in enumerate(diffs):
        if d > 0:
            current = 1
        elif d < 0:
            current = 0
        out[t] = current
    return out


def trend_da(actual, predicted) -> float:
    a, p = _aligned(actual, predicted, 2)
    return float(100.0 * np.mean(trends(a) == trends(p)))


def directional_accuracy(actual, predicted) -> float:
    """Share of steps whose actual and predicted moves have a strictly positive product."""
    a, p = _aligned(actual, predicted, 2)
    hits = np.diff(a) * np.diff(p) > 0
    return float(100.0 * np.count_nonzero(hits) / hits.size)


mda = directional_accuracy


def rmse(actual, predicted) -> float:
    a, p = _aligned(actual, predicted, 1)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def rmsre(actual, predicted) -> float:
    a, p = _aligned(actual, predicted, 1)
    if np.any(a == 0.0):
        raise ZeroDenominator("Relative error is undefined where the actual value is 0")
    return float(np.sqrt(np.mean(((p - a) / a) ** 2)))


mrmse = rmsre


def evaluate(actual, predicted, elapsed: float = 0.0) -> EvalReport:
    a, p = _aligned(actual, predicted, 2)
    relative = rmsre(a, p)
    report = EvalReport(
        directional_accuracy_pct=directional_accuracy(a, p),
        trend_da_pct=trend_da(a, p),
        rmse=rmse(a, p),
        rmsre=relative,
        mrmse=relative,
        processing_time_s=float(elapsed),
        n_points=int(a.size),
    )
    logger.debug(f"Evaluated {a.size} points: DA {report.directional_accuracy_pct:.2f}%, RMSE {report.rmse:.6g}")
    return report
