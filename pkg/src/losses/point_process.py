"""
Point-process losses
Intensity likelihood and component coverage with analytic (sub)gradients

Subgradient conventions: sign(0) = 0, and max ties go to the lowest index
(lowest component index for the intensity term, lowest sorted-GT index for coverage).
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import InvalidArgumentError
from ..intensity.laplace import IntensityMixture, MixtureRule, log_laplace


@dataclass
class ParamGrad:
    """Partial derivatives of a loss w.r.t. each component's center and scale"""

    d_center: np.ndarray
    d_scale: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.d_center, self.d_scale])


@dataclass
class LossGradients:
    intensity: ParamGrad
    coverage: ParamGrad


@dataclass
class PixelTerms:
    """
    Per-pixel loss values and gradients for a batch of mixtures

    Args:
        loss: (P,) per-pixel loss
        grad_centers: (P, n)
        grad_scales: (P, n)
        active: (P,) pixels that contribute (at least one GT depth)
    """

    loss: np.ndarray
    grad_centers: np.ndarray
    grad_scales: np.ndarray
    active: np.ndarray


def ordered_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Left-to-right sum; trailing zeros never change the result"""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[axis] == 0:
        return np.sum(values, axis=axis)
    return np.take(np.cumsum(values, axis=axis), -1, axis=axis)


def _nll_partials(gt: np.ndarray, centers: np.ndarray, scales: np.ndarray):
    """d/dd and d/db of -log L(g) = log(2b) + |g - d| / b"""
    r = gt - centers
    return -np.sign(r) / scales, 1.0 / scales - np.abs(r) / scales ** 2


def intensity_terms(centers: np.ndarray, scales: np.ndarray,
                    gt: np.ndarray, mask: np.ndarray) -> PixelTerms:
    """
    -sum_i log max_j L_j(g_i) for every pixel

    Args:
        centers, scales: (P, n) mixture parameters
        gt: (P, M) ground-truth depths sorted ascending, padded
        mask: (P, M) validity of gt entries

    Returns:
        PixelTerms
    """
    n = centers.shape[-1]
    logs = log_laplace(gt, centers, scales)                     # (P, M, n)
    best = np.argmax(logs, axis=-1)                             # (P, M)
    best_log = np.take_along_axis(logs, best[..., None], axis=-1)[..., 0]
    loss = ordered_sum(np.where(mask, -best_log, 0.0), axis=1)

    d_sel = np.take_along_axis(centers, best, axis=1)
    b_sel = np.take_along_axis(scales, best, axis=1)
    gd, gb = _nll_partials(gt, d_sel, b_sel)
    onehot = (best[..., None] == np.arange(n)) & mask[..., None]
    grad_c = np.where(onehot, gd[..., None], 0.0).sum(axis=1)
    grad_b = np.where(onehot, gb[..., None], 0.0).sum(axis=1)
    return PixelTerms(loss, grad_c, grad_b, mask.any(axis=1))


def coverage_terms(centers: np.ndarray, scales: np.ndarray,
                   gt: np.ndarray, mask: np.ndarray) -> PixelTerms:
    """
    -sum_j log max_i L_j(g_i) for every pixel; pixels without GT contribute zero

    Args:
        centers, scales: (P, n)
        gt, mask: (P, M) sorted ground truth and validity

    Returns:
        PixelTerms
    """
    active = mask.any(axis=1)
    logs = log_laplace(gt, centers, scales)                     # (P, M, n)
    logs = np.where(mask[..., None], logs, -np.inf)
    best = np.argmax(logs, axis=1)                              # (P, n)
    best_log = np.take_along_axis(logs, best[:, None, :], axis=1)[:, 0, :]
    per_comp = np.where(active[:, None], -best_log, 0.0)
    loss = ordered_sum(np.sort(per_comp, axis=1), axis=1)

    g_sel = np.take_along_axis(gt, best, axis=1)
    gd, gb = _nll_partials(g_sel, centers, scales)
    grad_c = np.where(active[:, None], gd, 0.0)
    grad_b = np.where(active[:, None], gb, 0.0)
    return PixelTerms(loss, grad_c, grad_b, active)


def weighted_terms(centers: np.ndarray, scales: np.ndarray,
                   gt: np.ndarray, mask: np.ndarray) -> PixelTerms:
    """NLL under the uniformly weighted mixture (1/n) sum_j L_j"""
    n = centers.shape[-1]
    logs = log_laplace(gt, centers, scales)                     # (P, M, n)
    per_gt = -(logsumexp(logs, axis=-1) - np.log(n))
    loss = ordered_sum(np.where(mask, per_gt, 0.0), axis=1)

    resp = softmax(logs, axis=-1) * mask[..., None]
    gd, gb = _nll_partials(gt[..., None], centers[:, None, :], scales[:, None, :])
    return PixelTerms(loss, (resp * gd).sum(axis=1), (resp * gb).sum(axis=1), mask.any(axis=1))


# ---------------------------------------------------------------------------
# Single-mixture API
# ---------------------------------------------------------------------------

def _prepare(m: IntensityMixture, gts: Sequence[float], rule: MixtureRule = MixtureRule.MAX_MIXTURE):
    if not isinstance(m, IntensityMixture):
        raise InvalidArgumentError("Expected an IntensityMixture")
    if m.rule is not rule:
        raise InvalidArgumentError(f"Loss needs the {rule.value} rule, got {m.rule.value}")
    gts = np.sort(np.asarray(gts, dtype=np.float64).ravel())
    if not np.all(np.isfinite(gts)):
        raise InvalidArgumentError("Ground-truth depths must be finite")
    return m.centers[None, :], m.scales[None, :], gts[None, :], np.ones((1, gts.size), dtype=bool)


def loss_intensity(m: IntensityMixture, gts: Sequence[float]) -> float:
    """
    Intensity negative log-likelihood of one pixel

    Args:
        m: Max-mixture
        gts: Ground-truth depths (any order)

    Returns:
        float: -sum_i log Lambda(g_i); 0.0 for an empty GT set
    """
    centers, scales, gt, mask = _prepare(m, gts)
    if gt.size == 0:
        return 0.0
    return float(intensity_terms(centers, scales, gt, mask).loss[0])


def loss_coverage(m: IntensityMixture, gts: Sequence[float]) -> float:
    """
    Component-coverage loss of one pixel

    Args:
        m: Max-mixture
        gts: Ground-truth depths (any order)

    Returns:
        float: -sum_j log max_i L_j(g_i); 0.0 for an empty GT set
    """
    centers, scales, gt, mask = _prepare(m, gts)
    if gt.size == 0:
        return 0.0
    return float(coverage_terms(centers, scales, gt, mask).loss[0])


def loss_weighted(m: IntensityMixture, gts: Sequence[float]) -> float:
    """NLL of the GT set under the uniformly weighted mixture"""
    centers, scales, gt, mask = _prepare(m, gts, MixtureRule.WEIGHTED_UNIFORM)
    if gt.size == 0:
        return 0.0
    return float(weighted_terms(centers, scales, gt, mask).loss[0])


def grad_losses(m: IntensityMixture, gts: Sequence[float]) -> LossGradients:
    """
    Analytic gradients of the intensity and coverage losses

    Args:
        m: Max-mixture
        gts: Ground-truth depths

    Returns:
        LossGradients: per-component partials of each term
    """
    centers, scales, gt, mask = _prepare(m, gts)
    if gt.size == 0:
        zero = ParamGrad(np.zeros(m.n), np.zeros(m.n))
        return LossGradients(zero, ParamGrad(np.zeros(m.n), np.zeros(m.n)))
    it = intensity_terms(centers, scales, gt, mask)
    ct = coverage_terms(centers, scales, gt, mask)
    return LossGradients(ParamGrad(it.grad_centers[0], it.grad_scales[0]),
                         ParamGrad(ct.grad_centers[0], ct.grad_scales[0]))

