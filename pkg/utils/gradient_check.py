# Import necessary libraries and packages
import numpy as np
from typing import Callable

DEFAULT_STEP = 1e-5
DEFAULT_FLOOR = 1e-6


def numerical_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """(f(x + h·e_i) - f(x - h·e_i)) / 2h for every entry of `x` (any shape)."""
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = f(x)
        flat[i] = original - h
        minus = f(x)
        flat[i] = original
        grad_flat[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = DEFAULT_FLOOR) -> float:
    """max |a - n| / max(|a| + |n|, floor), taken elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradient(
    f: Callable[[np.ndarray], float],
    grad: np.ndarray,
    x: np.ndarray,
    h: float = DEFAULT_STEP,
    floor: float = DEFAULT_FLOOR
) -> float:
    return relative_error(grad, numerical_gradient(f, x, h), floor)
