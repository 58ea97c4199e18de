"""
First-order optimizer pieces
AdamW with decoupled weight decay, polynomial LR decay, global-norm clipping
and the scale projection used after every step
"""
from typing import Dict, Tuple

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError


def poly_lr_multiplier(step: int, total_steps: int, power: float = 0.9) -> float:
    """(1 - step/total_steps) ** power, clamped to [0, 1]"""
    if total_steps <= 0:
        raise InvalidArgumentError("total_steps must be positive")
    frac = min(max(step / total_steps, 0.0), 1.0)
    return (1.0 - frac) ** power


def clip_grad_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """
    Rescale a gradient dict so its global L2 norm is at most max_norm

    Args:
        grads: Parameter name -> gradient array
        max_norm: Norm bound

    Returns:
        tuple: (clipped grads, norm before clipping); clipped = g * min(1, max_norm / |g|)
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total == 0.0 or total <= max_norm:
        return dict(grads), total
    factor = max_norm / total
    return {name: g * factor for name, g in grads.items()}, total


def project_scales(scales: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Clip Laplace scales into [lo, hi]"""
    return np.clip(scales, lo, hi)


class AdamW:
    """
    Adam with decoupled weight decay over a dict of numpy arrays

    Features:
    - In-place updates, so callers keep their array references
    - Per-step learning-rate multiplier for schedules
    - Zero learning rate leaves parameters bitwise unchanged

    Args:
        lr: Base learning rate
        betas: Momentum coefficients
        weight_decay: Decoupled decay coefficient
        eps: Denominator guard
    """

    def __init__(self, lr: float, betas: Tuple[float, float] = (0.9, 0.99),
                 weight_decay: float = 0.01, eps: float = 1e-8):
        if lr < 0:
            raise InvalidArgumentError(f"Learning rate must be nonnegative, got {lr}")
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.weight_decay = weight_decay
        self.eps = eps
        self.step_count = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr_scale: float = 1.0) -> None:
        self.step_count += 1
        lr = self.lr * lr_scale
        bias1 = 1.0 - self.beta1 ** self.step_count
        bias2 = 1.0 - self.beta2 ** self.step_count
        for name, param in params.items():
            grad = grads[name]
            m = self._m.setdefault(name, np.zeros_like(param))
            v = self._v.setdefault(name, np.zeros_like(param))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            if lr == 0.0:
                continue
            if self.weight_decay:
                param -= lr * self.weight_decay * param
            param -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
        logger.debug(f"AdamW step {self.step_count} lr={lr:.3e}")
