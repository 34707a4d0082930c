import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

import config
from models.dataset_entities import THRESHOLD_RULES, ReconstructedDataset, WaveletConfig
from utils.errors import ConfigError, LengthMismatch, TooShort

logger = logging.getLogger(__name__)

_SQRT2 = np.sqrt(2.0)


def haar_dwt(signal: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Single-level orthonormal Haar transform.

    Odd-length input is padded by repeating the last sample; pass the original
    length to ``haar_idwt`` to strip it again.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size < 2:
        raise TooShort(f"Haar transform needs at least 2 samples, got {x.size}")
    if x.size % 2:
        x = np.append(x, x[-1])
    even, odd = x[0::2], x[1::2]
    return (even + odd) / _SQRT2, (even - odd) / _SQRT2


def haar_idwt(approx: Sequence[float], detail: Sequence[float], length: Optional[int] = None) -> np.ndarray:
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.shape != d.shape:
        raise LengthMismatch(f"approx has {a.size} coefficients, detail has {d.size}")
    out = np.empty(2 * a.size, dtype=np.float64)
    out[0::2] = (a + d) / _SQRT2
    out[1::2] = (a - d) / _SQRT2
    if length is not None:
        out = out[:length]
    return out


def soft_threshold(coeffs: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - threshold, 0.0)


def universal_threshold(finest_detail: np.ndarray, n: int) -> float:
    """sigma * sqrt(2 ln n), sigma estimated as median(|d|) / 0.6745 on the finest level."""
    if finest_detail.size == 0 or n < 2:
        return 0.0
    sigma = float(np.median(np.abs(finest_detail))) / config.MAD_TO_SIGMA
    return sigma * np.sqrt(2.0 * np.log(n))


def _resolve_threshold(cfg: WaveletConfig, finest_detail: np.ndarray, n: int) -> Optional[float]:
    if cfg.threshold_rule == "none":
        return None
    if cfg.threshold_rule == "fixed":
        if cfg.threshold_value < 0:
            raise ConfigError(f"Fixed wavelet threshold must be non-negative, got {cfg.threshold_value}")
        return float(cfg.threshold_value)
    return universal_threshold(finest_detail, n)


def wavelet_denoise(signal: Sequence[float], cfg: WaveletConfig = WaveletConfig()) -> np.ndarray:
    if cfg.levels < 1:
        raise ConfigError(f"Wavelet levels must be >= 1, got {cfg.levels}")
    if cfg.threshold_rule not in THRESHOLD_RULES:
        raise ConfigError(f"Unknown threshold rule '{cfg.threshold_rule}'; expected one of {THRESHOLD_RULES}")
    if cfg.mode != "soft":
        raise ConfigError(f"Only soft thresholding is supported, got '{cfg.mode}'")

    x = np.asarray(signal, dtype=np.float64)
    if x.size < 2 ** cfg.levels:
        raise TooShort(f"{cfg.levels}-level decomposition needs at least {2 ** cfg.levels} samples, got {x.size}")

    details: List[np.ndarray] = []
    lengths: List[int] = []
    approx = x
    for _ in range(cfg.levels):
        lengths.append(approx.size)
        approx, detail = haar_dwt(approx)
        details.append(detail)

    threshold = _resolve_threshold(cfg, details[0], x.size)
    if threshold is not None:
        details = [soft_threshold(d, threshold) for d in details]
        logger.debug(f"Soft-thresholded {cfg.levels} detail levels at {threshold:.6g}")

    for detail, length in zip(reversed(details), reversed(lengths)):
        approx = haar_idwt(approx, detail, length=length)
    return approx


def phase_space_reconstruct(signal, m: int, tau: int, target_column: int = 0) -> ReconstructedDataset:
    """Sliding-window delay embedding.

    Window t is [x(t), x(t+tau), ..., x(t+(m-1)tau)] and its target is x(t+(m-1)tau+1),
    for every t whose target index is in range. A 2-D signal of shape (N, F) yields
    windows of shape (m, F) with targets from ``target_column``.
    """
    if m < 1 or tau < 1:
        raise ConfigError(f"Embedding needs m >= 1 and tau >= 1, got m={m}, tau={tau}")
    values = np.asarray(signal, dtype=np.float64)
    if values.ndim not in (1, 2):
        raise ConfigError(f"Signal must be 1-D or 2-D, got shape {values.shape}")

    n_source = values.shape[0]
    span = (m - 1) * tau
    n = max(0, n_source - span - 1)
    starts = np.arange(n)
    index = starts[:, None] + np.arange(m)[None, :] * tau
    target = values if values.ndim == 1 else values[:, target_column]

    if n:
        x = values[index]
        y = target[starts + span + 1]
    else:
        x = np.empty((0, m) + values.shape[1:], dtype=np.float64)
        y = np.empty(0, dtype=np.float64)
    return ReconstructedDataset(x=x, y=y, m=m, tau=tau)


def feature_matrix(series, features: Sequence[str]) -> np.ndarray:
    """(N,) for a single feature, (N, F) otherwise; the first feature is the modeled target."""
    unknown = [f for f in features if f not in config.FEATURE_COLUMNS]
    if unknown or not features:
        raise ConfigError(f"Unknown features {unknown or list(features)}; expected names from {sorted(config.FEATURE_COLUMNS)}")
    columns = [series.column(config.FEATURE_COLUMNS[f]) for f in features]
    return columns[0] if len(columns) == 1 else np.stack(columns, axis=1)
