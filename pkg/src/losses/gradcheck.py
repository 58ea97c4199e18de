"""
Finite-difference checks of the point-process loss gradients
"""
from typing import List, Tuple

import numpy as np
from loguru import logger

from ..intensity.laplace import IntensityMixture, log_laplace
from ..utils.numerics import GradcheckReport, central_difference, relative_error
from .point_process import grad_losses, loss_coverage, loss_intensity

MIN_GAP = 1e-3


def _smooth_instance(rng: np.random.Generator, max_components: int = 6, max_layers: int = 5):
    """Random (centers, scales, gts) away from every kink of the losses"""
    while True:
        n = int(rng.integers(1, max_components + 1))
        m = int(rng.integers(1, max_layers + 1))
        centers = rng.uniform(-3.0, 3.0, n)
        scales = rng.uniform(0.5, 3.0, n)
        gts = rng.uniform(-3.0, 3.0, m)
        if np.min(np.abs(gts[:, None] - centers[None, :])) <= MIN_GAP:
            continue
        logs = log_laplace(gts, centers, scales)            # (m, n)
        if n > 1:
            top = np.sort(logs, axis=1)
            if np.min(top[:, -1] - top[:, -2]) <= MIN_GAP:
                continue
        if m > 1:
            top = np.sort(logs, axis=0)
            if np.min(top[-1, :] - top[-2, :]) <= MIN_GAP:
                continue
        return centers, scales, gts


def _numeric(loss_fn, centers: np.ndarray, scales: np.ndarray, gts: np.ndarray, h: float) -> np.ndarray:
    n = centers.size

    def fn(theta: np.ndarray) -> float:
        return loss_fn(IntensityMixture.from_arrays(theta[:n], theta[n:]), gts)

    return central_difference(fn, np.concatenate([centers, scales]), h)


def check_loss_gradients(seed: int = 0, trials: int = 500, h: float = 1e-6,
                         tolerance: float = 1e-4) -> List[GradcheckReport]:
    """
    Compare analytic intensity/coverage gradients with central differences

    Args:
        seed: RNG seed
        trials: Number of random smooth instances
        h: Finite-difference step
        tolerance: Maximum allowed relative error

    Returns:
        list: One GradcheckReport per loss
    """
    rng = np.random.default_rng(seed)
    worst = {"intensity": 0.0, "coverage": 0.0}
    for _ in range(trials):
        centers, scales, gts = _smooth_instance(rng)
        mixture = IntensityMixture.from_arrays(centers, scales)
        grads = grad_losses(mixture, gts)
        for name, fn, analytic in (("intensity", loss_intensity, grads.intensity),
                                   ("coverage", loss_coverage, grads.coverage)):
            numeric = _numeric(fn, centers, scales, gts, h)
            worst[name] = max(worst[name], relative_error(analytic.as_vector(), numeric))

    reports = [GradcheckReport(f"loss_{name}", trials, err, tolerance) for name, err in worst.items()]
    for report in reports:
        logger.info(report.summary())
    return reports
