"""
Multi-scale gradient-matching loss
Mean |dx R| + |dy R| of the residual R = pred - gt over valid pixels, at factor-2 scales
"""
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError


class GradientMatching(NamedTuple):
    value: float
    empty: bool
    grads: Optional[List[np.ndarray]] = None


def _level_weight(weights: Sequence[float], index: int) -> float:
    if not weights:
        return 1.0
    return float(weights[min(index, len(weights) - 1)])


def _single_scale(residual: np.ndarray, mask: np.ndarray, want_grad: bool):
    count = int(mask.sum())
    if count == 0:
        return 0.0, None, 0
    mx = mask[:, 1:] & mask[:, :-1]
    my = mask[1:, :] & mask[:-1, :]
    dx = residual[:, 1:] - residual[:, :-1]
    dy = residual[1:, :] - residual[:-1, :]
    value = (np.abs(dx)[mx].sum() + np.abs(dy)[my].sum()) / count
    grad = None
    if want_grad:
        grad = np.zeros_like(residual)
        gx = np.where(mx, np.sign(dx), 0.0) / count
        gy = np.where(my, np.sign(dy), 0.0) / count
        grad[:, 1:] += gx
        grad[:, :-1] -= gx
        grad[1:, :] += gy
        grad[:-1, :] -= gy
    return float(value), grad, count


def gradient_matching_with_grad(pred_layers: Sequence[np.ndarray], gt_layers: Sequence[np.ndarray],
                                valid: Sequence[np.ndarray], cfg, want_grad: bool = True,
                                layer_ids: Optional[Sequence[int]] = None) -> GradientMatching:
    """
    Gradient-matching loss and its gradient w.r.t. each predicted layer image

    Args:
        pred_layers: (H, W) predicted depth images
        gt_layers: (H, W) GT depth images, same order as pred_layers
        valid: (H, W) boolean masks, one per layer
        cfg: LossConfig (gm_num_scales, gm_scale_weights, gm_weight_mode)
        want_grad: Also return d loss / d pred for every layer
        layer_ids: GT layer index of each pair for per-layer weighting (default 0..L-1)

    Returns:
        GradientMatching: (value, empty-mask flag, gradients)
    """
    if not (len(pred_layers) == len(gt_layers) == len(valid)):
        raise InvalidArgumentError("pred, gt and mask lists differ in length")
    if layer_ids is None:
        layer_ids = list(range(len(pred_layers)))
    per_layer = cfg.gm_weight_mode == "per_layer"

    total = 0.0
    seen = 0
    grads = []
    for pred, gt, mask, layer in zip(pred_layers, gt_layers, valid, layer_ids):
        pred = np.asarray(pred, dtype=np.float64)
        mask = np.asarray(mask, dtype=bool)
        if pred.shape != np.shape(gt) or pred.shape != mask.shape:
            raise InvalidArgumentError(f"Layer shapes disagree: {pred.shape}, {np.shape(gt)}, {mask.shape}")
        residual = np.where(mask, pred - np.where(mask, gt, 0.0), 0.0)
        layer_grad = np.zeros_like(pred) if want_grad else None
        for level in range(cfg.gm_num_scales):
            step = 2 ** level
            sub_r = residual[::step, ::step]
            sub_m = mask[::step, ::step]
            if sub_r.size == 0:
                break
            weight = _level_weight(cfg.gm_scale_weights, layer if per_layer else level)
            value, grad, count = _single_scale(sub_r, sub_m, want_grad)
            if count == 0:
                continue
            seen += count
            total += weight * value
            if want_grad:
                layer_grad[::step, ::step] += weight * grad
        grads.append(layer_grad)

    if seen == 0:
        logger.warning("⚠️ Gradient matching: valid mask is empty, loss set to zero")
        return GradientMatching(0.0, True, grads if want_grad else None)
    return GradientMatching(float(total), False, grads if want_grad else None)


def loss_gradient_matching(pred_layers: Sequence[np.ndarray], gt_layers: Sequence[np.ndarray],
                           valid: Sequence[np.ndarray], cfg) -> GradientMatching:
    """
    Multi-scale gradient-matching loss

    Args:
        pred_layers: Predicted layer images in normalized space
        gt_layers: GT layer images in normalized space
        valid: Validity masks
        cfg: LossConfig

    Returns:
        GradientMatching: value and empty-mask warning flag
    """
    return gradient_matching_with_grad(pred_layers, gt_layers, valid, cfg, want_grad=False)
