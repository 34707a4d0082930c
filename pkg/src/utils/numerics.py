"""Dense float64 numerics shared by the generator and discriminator.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Randomness comes
from ``numpy.random.Generator`` backed by the PCG64 bit generator, whose stream
is fixed for a given seed on every platform numpy supports.
"""
import logging
from typing import Callable, Union

import numpy as np

from utils.errors import NonFinite, ShapeMismatch

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(values, rows: int, cols: int) -> np.ndarray:
    """Reshape row-major values into a rows x cols float64 matrix."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size != rows * cols:
        raise ShapeMismatch(f"Expected {rows * cols} values for a {rows}x{cols} matrix, got {arr.size}")
    return arr.reshape(rows, cols)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"Cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return a @ b


def sigmoid(x: ArrayLike) -> ArrayLike:
    x = np.asarray(x, dtype=np.float64)
    # exp(-|x|) never overflows
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return out if out.ndim else float(out)


def tanh(x: ArrayLike) -> ArrayLike:
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return out if out.ndim else float(out)


def relu(x: ArrayLike) -> ArrayLike:
    out = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return out if out.ndim else float(out)


def softplus(x: ArrayLike) -> ArrayLike:
    """log(1 + e^x) without overflow."""
    x = np.asarray(x, dtype=np.float64)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return out if out.ndim else float(out)


def xavier_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ShapeMismatch(f"xavier_init needs positive dimensions, got {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def gradient_check(
    f: Callable[[np.ndarray], float],
    params: np.ndarray,
    analytic: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Compare an analytic gradient with central differences of ``f``.

    Returns the largest relative error
    ``|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`` over all coordinates.
    """
    params = np.array(params, dtype=np.float64).ravel()
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    if analytic.shape != params.shape:
        raise ShapeMismatch(f"Analytic gradient has {analytic.size} entries for {params.size} parameters")

    numeric = np.zeros_like(params)
    for i in range(params.size):
        original = params[i]
        params[i] = original + eps
        f_plus = f(params)
        params[i] = original - eps
        f_minus = f(params)
        params[i] = original
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFinite(f"Function is not finite around parameter {i}")
        numeric[i] = (f_plus - f_minus) / (2.0 * eps)

    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    rel = np.abs(analytic - numeric) / denom
    worst = float(rel.max()) if rel.size else 0.0
    logger.debug(f"gradient_check over {params.size} parameters: max relative error {worst:.3e}")
    return worst
