"""
Ablation losses
Depth-ordered alternatives to the point-process objective: ordered Laplace NLL, L1 and SiLog
"""
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import InvalidArgumentError
from ..intensity.laplace import IntensityMixture
from .point_process import PixelTerms, ordered_sum


class MatchedLoss(NamedTuple):
    """Loss over index-matched (prediction, GT) pairs"""

    value: float
    matched: int
    ignored: int


def _sorted_pair(pred: Sequence[float], gt: Sequence[float]):
    pred = np.sort(np.asarray(pred, dtype=np.float64).ravel())
    gt = np.sort(np.asarray(gt, dtype=np.float64).ravel())
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(gt))):
        raise InvalidArgumentError("Depths must be finite")
    k = min(pred.size, gt.size)
    return pred[:k], gt[:k], abs(pred.size - gt.size)


def ordered_terms(centers: np.ndarray, scales: np.ndarray,
                  gt: np.ndarray, mask: np.ndarray) -> PixelTerms:
    """
    Component slot i models the i-th sorted GT depth with its own Laplace NLL

    Args:
        centers, scales: (P, n) in slot order
        gt, mask: (P, M) sorted ground truth and validity

    Returns:
        PixelTerms
    """
    n = centers.shape[-1]
    k = min(n, gt.shape[1])
    valid = mask[:, :k]
    c, s, g = centers[:, :k], scales[:, :k], gt[:, :k]
    nll = np.log(2.0 * s) + np.abs(g - c) / s
    loss = ordered_sum(np.where(valid, nll, 0.0), axis=1)
    r = g - c
    grad_c = np.zeros_like(centers)
    grad_b = np.zeros_like(scales)
    grad_c[:, :k] = np.where(valid, -np.sign(r) / s, 0.0)
    grad_b[:, :k] = np.where(valid, 1.0 / s - np.abs(r) / s ** 2, 0.0)
    return PixelTerms(loss, grad_c, grad_b, mask.any(axis=1))


def l1_terms(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> PixelTerms:
    """
    Sum of |sorted prediction - sorted GT| over matched slots, per pixel

    Args:
        pred: (P, n) unordered predictions
        gt, mask: (P, M) sorted ground truth and validity

    Returns:
        PixelTerms (grad_scales is all zero)
    """
    order = np.argsort(pred, axis=1, kind="stable")
    ps = np.take_along_axis(pred, order, axis=1)
    k = min(pred.shape[1], gt.shape[1])
    valid = mask[:, :k]
    diff = ps[:, :k] - gt[:, :k]
    loss = ordered_sum(np.where(valid, np.abs(diff), 0.0), axis=1)
    grad_sorted = np.zeros_like(pred)
    grad_sorted[:, :k] = np.where(valid, np.sign(diff), 0.0)
    grad = np.zeros_like(pred)
    np.put_along_axis(grad, order, grad_sorted, axis=1)
    return PixelTerms(loss, grad, np.zeros_like(pred), mask.any(axis=1))


class ImageTerms(NamedTuple):
    """Image-level loss with per-slot center gradients"""

    value: float
    grad_centers: np.ndarray
    matched: int


def silog_terms(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray, offset: float = 0.0,
                variance_weight: float = 0.85, floor: float = 1e-6) -> ImageTerms:
    """
    SiLog over every (sorted prediction, sorted GT) slot pair of an image

    Depths are shifted by offset before the logarithm, so normalized maps can be
    scored with offset = t / s. Predictions below floor are clamped and get no gradient.

    Args:
        pred: (P, n) unordered predictions
        gt, mask: (P, M) sorted ground truth and validity
        offset: Added to predictions and GT
        variance_weight: lambda in sqrt(mean(e^2) - lambda * mean(e)^2)
        floor: Smallest shifted prediction fed to the logarithm

    Returns:
        ImageTerms
    """
    order = np.argsort(pred, axis=1, kind="stable")
    ps = np.take_along_axis(pred, order, axis=1)
    k = min(pred.shape[1], gt.shape[1])
    valid = mask[:, :k]
    grad = np.zeros_like(pred)
    count = int(valid.sum())
    if count == 0:
        return ImageTerms(0.0, grad, 0)
    g = np.where(valid, gt[:, :k] + offset, 1.0)
    if np.any(g <= 0):
        raise InvalidArgumentError(f"SiLog offset {offset} leaves non-positive GT depths")
    p = ps[:, :k] + offset
    clamped = p < floor
    p = np.maximum(p, floor)
    e = np.where(valid, np.log(p) - np.log(g), 0.0)
    mean = float(np.sum(e)) / count
    value = max(float(np.sum(e ** 2)) / count - variance_weight * mean ** 2, 0.0)
    loss = float(np.sqrt(value))
    if loss > 0:
        grad_sorted = np.zeros_like(pred)
        grad_sorted[:, :k] = np.where(valid & ~clamped, (e - variance_weight * mean) / (count * loss * p), 0.0)
        np.put_along_axis(grad, order, grad_sorted, axis=1)
    return ImageTerms(loss, grad, count)


def loss_ordered(m: IntensityMixture, gts: Sequence[float]) -> MatchedLoss:
    """
    Ordered-distribution NLL: component i explains the i-th sorted GT depth

    Args:
        m: Mixture whose component order is the layer order
        gts: Ground-truth depths

    Returns:
        MatchedLoss: sum_i [log(2b_i) + |g_i - d_i| / b_i] over min(m, n) slots
    """
    gt = np.sort(np.asarray(gts, dtype=np.float64).ravel())
    if not np.all(np.isfinite(gt)):
        raise InvalidArgumentError("Ground-truth depths must be finite")
    k = min(m.n, gt.size)
    if gt.size == 0:
        return MatchedLoss(0.0, 0, m.n)
    terms = ordered_terms(m.centers[None, :], m.scales[None, :], gt[None, :],
                          np.ones((1, gt.size), dtype=bool))
    return MatchedLoss(float(terms.loss[0]), k, abs(m.n - gt.size))


def loss_l1(pred: Sequence[float], gt: Sequence[float]) -> MatchedLoss:
    """Mean absolute error between sorted predictions and sorted GT"""
    p, g, ignored = _sorted_pair(pred, gt)
    if p.size == 0:
        return MatchedLoss(0.0, 0, ignored)
    return MatchedLoss(float(np.mean(np.abs(p - g))), p.size, ignored)


def loss_silog(pred: Sequence[float], gt: Sequence[float], variance_weight: float = 0.85) -> MatchedLoss:
    """
    Scale-invariant log error between sorted predictions and sorted GT

    Args:
        pred: Predicted depths (positive)
        gt: Ground-truth depths (positive)
        variance_weight: lambda in sqrt(mean(g^2) - lambda * mean(g)^2)

    Returns:
        MatchedLoss
    """
    p, g, ignored = _sorted_pair(pred, gt)
    if p.size == 0:
        return MatchedLoss(0.0, 0, ignored)
    if np.any(p <= 0) or np.any(g <= 0):
        raise InvalidArgumentError("SiLog needs strictly positive depths")
    diff = np.log(p) - np.log(g)
    mean = float(np.mean(diff))
    value = float(np.var(diff)) + (1.0 - variance_weight) * mean ** 2
    return MatchedLoss(float(np.sqrt(max(value, 0.0))), p.size, ignored)
