"""
Combined training objective
lambda_int * L_int + lambda_cov * L_cov + lambda_gm * L_gm, averaged over contributing pixels
"""
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError
from ..intensity.field import MixtureField
from .ablation import l1_terms, ordered_terms, silog_terms
from .depth_map import MultiLayerDepthMap
from .gradient_matching import gradient_matching_with_grad
from .point_process import coverage_terms, intensity_terms, weighted_terms

OBJECTIVES = ("max", "weighted", "ordered", "l1", "silog")


@dataclass
class LossConfig:
    """
    Loss weights and gradient-matching settings

    Args:
        lambda_int: Weight of the intensity likelihood
        lambda_cov: Weight of the component-coverage loss
        lambda_gm: Weight of the gradient-matching loss
        gm_scale_weights: Per-layer (or per-scale) GM weights
        gm_num_scales: Number of factor-2 scales for GM
        gm_weight_mode: 'per_layer' or 'per_scale' reading of gm_scale_weights
        scale_clip_lo, scale_clip_hi: Bounds for Laplace scales in normalized space
        silog_offset: Shift making normalized depths positive for the silog objective (t / s)
        silog_variance_weight: lambda of the SiLog variance term
    """

    lambda_int: float = 1.0
    lambda_cov: float = 0.1
    lambda_gm: float = 1.0
    gm_scale_weights: Tuple[float, ...] = (1.2, 1.0, 1.0, 1.0)
    gm_num_scales: int = 4
    gm_weight_mode: str = "per_layer"
    scale_clip_lo: float = 1.0
    scale_clip_hi: float = 10.0
    silog_offset: Optional[float] = None
    silog_variance_weight: float = 0.85

    def __post_init__(self):
        for name in ("lambda_int", "lambda_cov", "lambda_gm"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if self.gm_weight_mode not in ("per_layer", "per_scale"):
            raise InvalidArgumentError(f"Unknown gm_weight_mode '{self.gm_weight_mode}'")
        if self.gm_num_scales < 1:
            raise InvalidArgumentError("gm_num_scales must be >= 1")
        if not 0 < self.scale_clip_lo <= self.scale_clip_hi:
            raise InvalidArgumentError("Scale clip range must satisfy 0 < lo <= hi")
        if not 0 <= self.silog_variance_weight <= 1:
            raise InvalidArgumentError("silog_variance_weight must lie in [0, 1]")
        self.gm_scale_weights = tuple(float(w) for w in self.gm_scale_weights)


@dataclass
class LossBreakdown:
    total: float = 0.0
    intensity: float = 0.0
    coverage: float = 0.0
    gradient_matching: float = 0.0
    intensity_sum: float = 0.0
    coverage_sum: float = 0.0
    contributing_pixels: int = 0
    gm_empty: bool = False
    pairing: List[Tuple[int, int]] = field(default_factory=list)

    def as_dict(self) -> Dict[str, float]:
        out = asdict(self)
        out.pop("pairing")
        return out


def pair_components_to_layers(centers: np.ndarray, gt: MultiLayerDepthMap) -> List[Tuple[int, int]]:
    """
    Greedy one-to-one pairing of component center maps to GT layer images

    Args:
        centers: (H, W, n) component centers
        gt: Normalized GT map of the same size

    Returns:
        list: (component index, GT layer index) pairs by ascending mean |d - g|
    """
    n = centers.shape[-1]
    candidates = []
    for layer in range(gt.max_layers):
        image, mask = gt.layer_image(layer)
        if not mask.any():
            continue
        for j in range(n):
            cost = float(np.mean(np.abs(centers[..., j][mask] - image[mask])))
            candidates.append((cost, j, layer))
    candidates.sort()
    used_c, used_l, pairs = set(), set(), []
    for _, j, layer in candidates:
        if j in used_c or layer in used_l:
            continue
        used_c.add(j)
        used_l.add(layer)
        pairs.append((j, layer))
    return pairs


def objective_with_grads(centers: np.ndarray, scales: np.ndarray, gt: MultiLayerDepthMap,
                         cfg: LossConfig, objective: str = "max",
                         pairing: Optional[Sequence[Tuple[int, int]]] = None,
                         want_grad: bool = True):
    """
    Full objective over an image plus gradients w.r.t. every center and scale

    Args:
        centers, scales: (H, W, n) field parameters
        gt: Normalized GT map
        cfg: LossConfig
        objective: One of OBJECTIVES
        pairing: GM pairing; computed greedily when None and lambda_gm > 0
        want_grad: Skip the gradient arrays when False

    Returns:
        tuple: (LossBreakdown, grad_centers (H, W, n), grad_scales (H, W, n))
    """
    if objective not in OBJECTIVES:
        raise InvalidArgumentError(f"Unknown objective '{objective}', expected one of {OBJECTIVES}")
    h, w, n = centers.shape
    if (h, w) != (gt.height, gt.width):
        raise InvalidArgumentError(f"Field is {w}x{h} but GT is {gt.width}x{gt.height}")
    c = centers.reshape(-1, n)
    b = scales.reshape(-1, n)
    values, mask = gt.padded()

    breakdown = LossBreakdown()
    grad_c = np.zeros_like(c)
    grad_b = np.zeros_like(b)
    active = mask.any(axis=1)
    count = int(active.sum())
    breakdown.contributing_pixels = count
    denom = max(count, 1)

    if objective == "silog":
        if cfg.silog_offset is None:
            raise InvalidArgumentError("The silog objective needs LossConfig.silog_offset (t / s of the GT)")
        silog = silog_terms(c, values, mask, cfg.silog_offset, cfg.silog_variance_weight)
        breakdown.intensity_sum = silog.value
        breakdown.intensity = silog.value
        if cfg.lambda_int > 0 and want_grad:
            grad_c += cfg.lambda_int * silog.grad_centers
    else:
        if objective == "max":
            terms_int = intensity_terms(c, b, values, mask)
        elif objective == "weighted":
            terms_int = weighted_terms(c, b, values, mask)
        elif objective == "ordered":
            terms_int = ordered_terms(c, b, values, mask)
        else:
            terms_int = l1_terms(c, values, mask)
        breakdown.intensity_sum = float(np.sum(terms_int.loss[active]))
        breakdown.intensity = breakdown.intensity_sum / denom
        if cfg.lambda_int > 0 and want_grad:
            grad_c += cfg.lambda_int * terms_int.grad_centers / denom
            grad_b += cfg.lambda_int * terms_int.grad_scales / denom

    use_cov = objective in ("max", "weighted")
    if use_cov and cfg.lambda_cov > 0:
        terms_cov = coverage_terms(c, b, values, mask)
        breakdown.coverage_sum = float(np.sum(terms_cov.loss[active]))
        breakdown.coverage = breakdown.coverage_sum / denom
        if want_grad:
            grad_c += cfg.lambda_cov * terms_cov.grad_centers / denom
            grad_b += cfg.lambda_cov * terms_cov.grad_scales / denom

    gm_grad = np.zeros_like(centers)
    if cfg.lambda_gm > 0:
        if pairing is None:
            pairing = pair_components_to_layers(centers, gt)
        breakdown.pairing = list(pairing)
        preds, gts, masks, ids = [], [], [], []
        for j, layer in pairing:
            image, lmask = gt.layer_image(layer)
            preds.append(centers[..., j])
            gts.append(image)
            masks.append(lmask)
            ids.append(layer)
        gm = gradient_matching_with_grad(preds, gts, masks, cfg, want_grad=want_grad, layer_ids=ids)
        breakdown.gradient_matching = gm.value
        breakdown.gm_empty = gm.empty
        if want_grad and gm.grads is not None:
            for (j, _), g in zip(pairing, gm.grads):
                gm_grad[..., j] += cfg.lambda_gm * g

    total = 0.0
    for weight, term in ((cfg.lambda_int, breakdown.intensity),
                         (cfg.lambda_cov, breakdown.coverage if use_cov else 0.0),
                         (cfg.lambda_gm, breakdown.gradient_matching)):
        if weight:
            total += weight * term
    breakdown.total = total

    if not want_grad:
        return breakdown, None, None
    grad_c = grad_c.reshape(h, w, n) + gm_grad
    return breakdown, grad_c, grad_b.reshape(h, w, n)


def loss_total(field: MixtureField, gt: MultiLayerDepthMap,
               pairing: Optional[Sequence[Tuple[int, int]]] = None,
               cfg: Optional[LossConfig] = None) -> Tuple[float, LossBreakdown]:
    """
    Weighted training objective of a per-pixel max-mixture field

    Args:
        field: Mixture per pixel (normalized space)
        gt: Normalized GT map
        pairing: Component-to-layer pairing for gradient matching (greedy if None)
        cfg: LossConfig (defaults if None)

    Returns:
        tuple: (total, LossBreakdown)
    """
    cfg = cfg or LossConfig()
    breakdown, _, _ = objective_with_grads(field.centers, field.scales, gt, cfg,
                                           objective="max", pairing=pairing, want_grad=False)
    logger.debug(f"Loss breakdown: {breakdown.as_dict()}")
    return breakdown.total, breakdown
