"""
Finite-difference check of backward_recurrence
"""
from typing import List

import numpy as np
from loguru import logger

from ..utils.numerics import GradcheckReport, central_difference, relative_error
from .params import PARAM_NAMES, init_params
from .recurrence import DecompConfig, FeatureImage, backward_recurrence, run_recurrence

# Wide clip range so the scale projection never becomes active during the check
SMOOTH_CLIP = (1e-6, 1e6)


def _random_instance(rng: np.random.Generator):
    f = int(rng.integers(2, 4))
    c = int(rng.integers(2, 4))
    n = int(rng.integers(1, 4))
    h, w = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    params = init_params(f, c, n, seed=int(rng.integers(1 << 31)),
                         per_iteration=bool(rng.integers(2)))
    for arr in params.arrays().values():
        arr += rng.normal(0.0, 0.1, arr.shape)
    cfg = DecompConfig(center_link=str(rng.choice(["identity", "softplus"])),
                       scale_clip_lo=SMOOTH_CLIP[0], scale_clip_hi=SMOOTH_CLIP[1])
    features = FeatureImage(rng.normal(size=(h, w, f)))
    upstream_c = rng.normal(size=(h, w, n))
    upstream_b = rng.normal(size=(h, w, n))
    return params, cfg, features, upstream_c, upstream_b


def recurrence_gradient_error(params, cfg, features, upstream_c, upstream_b, h: float = 1e-6) -> float:
    """Relative error of backward_recurrence for the loss <G_c, centers> + <G_b, scales>"""
    out = run_recurrence(features, params, cfg)
    grads = backward_recurrence(out.tape, upstream_c, upstream_b)
    analytic = np.concatenate([grads[name].ravel() for name in PARAM_NAMES])

    def objective(vector: np.ndarray) -> float:
        o = run_recurrence(features, params.with_vector(vector), cfg)
        return float(np.sum(upstream_c * o.centers) + np.sum(upstream_b * o.scales))

    numeric = central_difference(objective, params.to_vector(), h)
    return relative_error(analytic, numeric)


def check_recurrence_gradients(seed: int = 0, trials: int = 100, h: float = 1e-6,
                               tolerance: float = 1e-4) -> List[GradcheckReport]:
    """
    Compare backward_recurrence with central differences on random tiny instances

    Args:
        seed: RNG seed
        trials: Instances to check
        h: Finite-difference step
        tolerance: Maximum allowed relative error

    Returns:
        list: One GradcheckReport
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, recurrence_gradient_error(*_random_instance(rng), h=h))
    report = GradcheckReport("backward_recurrence", trials, worst, tolerance)
    logger.info(report.summary())
    return [report]
