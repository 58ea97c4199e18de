"""
Numerical helpers
Central finite differences and gradient comparison
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np


def central_difference(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """
    Numerical gradient of a scalar function by central differences

    Args:
        fn: Function of a float64 array
        x: Point of evaluation (not modified)
        h: Step

    Returns:
        numpy array shaped like x
    """
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn(x)
        flat[i] = orig - h
        down = fn(x)
        flat[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Largest elementwise |a - n| / max(|a|, |n|, 1)"""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


@dataclass
class GradcheckReport:
    name: str
    trials: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance

    def summary(self) -> str:
        status = "✅ PASSED" if self.passed else "❌ FAILED"
        return (f"{self.name:28s}: {status}  trials={self.trials} "
                f"max_rel_err={self.max_error:.3e} (tol {self.tolerance:.0e})")
