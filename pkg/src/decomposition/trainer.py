"""
Training loop of the recurrent decomposition
AdamW + global gradient clipping + polynomial LR decay over whole-image steps
"""
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError, NumericalError
from ..losses.combined import OBJECTIVES, LossBreakdown, LossConfig, objective_with_grads
from ..losses.depth_map import MultiLayerDepthMap
from ..optim.adamw import AdamW, clip_grad_norm, poly_lr_multiplier
from .params import DecompParams, init_params
from .recurrence import DecompConfig, FeatureImage, backward_recurrence, run_recurrence

CENTER_INITS = ("random", "spread")


@dataclass
class FitConfig:
    """
    Optimizer and initialization settings

    Args:
        steps: Total optimizer steps K
        lr: Base learning rate, scaled by (1 - k/K) ** lr_power
        betas, weight_decay, eps: AdamW settings
        grad_clip: Global gradient-norm bound
        objective: One of OBJECTIVES
        component_dim: C of freshly initialized params
        n_iterations: n of freshly initialized params
        per_iteration: One predictor per iteration
        init_scale: Uniform init range multiplier
        center_init: 'random' keeps the random predictor; 'spread' starts the center outputs as
            constants spread evenly over the GT depth range (one per predictor)
        refit_centers: After the last step, least-squares correct the center rows of the
            predictor(s) onto the depths the objective assigns to each component
        seed: Initialization seed
        log_every: Steps between progress lines
    """

    steps: int = 2000
    lr: float = 5e-3
    betas: tuple = (0.9, 0.99)
    weight_decay: float = 0.01
    eps: float = 1e-8
    grad_clip: float = 0.1
    lr_power: float = 0.9
    objective: str = "max"
    component_dim: int = 8
    n_iterations: int = 4
    per_iteration: bool = False
    init_scale: float = 1.0
    center_init: str = "random"
    refit_centers: bool = False
    seed: int = 0
    log_every: int = 250

    def __post_init__(self):
        if self.steps < 0:
            raise InvalidArgumentError("steps must be >= 0")
        if self.lr < 0:
            raise InvalidArgumentError("lr must be >= 0")
        if self.objective not in OBJECTIVES:
            raise InvalidArgumentError(f"Unknown objective '{self.objective}', expected one of {OBJECTIVES}")
        if self.center_init not in CENTER_INITS:
            raise InvalidArgumentError(f"Unknown center_init '{self.center_init}', expected one of {CENTER_INITS}")
        self.betas = tuple(float(b) for b in self.betas)


@dataclass
class FitResult:
    params: DecompParams
    trace: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    final: Optional[LossBreakdown] = None
    max_eta_residual: float = 0.0
    degenerate_steps: int = 0
    refit_residual: Optional[float] = None


def spread_centers(params: DecompParams, gt: MultiLayerDepthMap, decomp_cfg: DecompConfig) -> DecompParams:
    """
    Constant center outputs spread evenly over the GT depth range

    Predictor k of K outputs the k-th of K evenly spaced depths between the smallest and
    largest GT depth (the median when K = 1); its center weights are zeroed.

    Returns:
        DecompParams: a modified copy
    """
    if decomp_cfg.center_link != "identity":
        raise InvalidArgumentError("Spread center init writes raw center outputs and needs the identity link")
    depths = gt.all_depths()
    if depths.size == 0:
        raise InvalidArgumentError("Spread center init needs at least one GT depth")
    k = params.W_P.shape[0]
    targets = np.linspace(depths.min(), depths.max(), k) if k > 1 else np.array([np.median(depths)])
    out = params.copy()
    out.W_P[:, 0, :] = 0.0
    out.b_P[:, 0] = targets
    logger.debug(f"Spread initial centers: {np.round(targets, 4).tolist()}")
    return out


def assigned_depths(centers: np.ndarray, gt: MultiLayerDepthMap, objective: str) -> np.ndarray:
    """
    GT depth each component is matched with under an objective

    max / weighted: the nearest GT depth. ordered: the GT depth whose rank is the
    component index. l1 / silog: the GT depth whose rank is the component's position
    among the sorted centers.

    Args:
        centers: (H, W, n) component centers
        gt: Normalized GT map
        objective: One of OBJECTIVES

    Returns:
        np.ndarray: (H * W, n) targets, NaN where a component has none
    """
    n = centers.shape[-1]
    c = centers.reshape(-1, n)
    values, mask = gt.padded()
    out = np.full_like(c, np.nan)
    if values.shape[1] == 0:
        return out
    if objective in ("max", "weighted"):
        dist = np.where(mask[:, None, :], np.abs(c[:, :, None] - values[:, None, :]), np.inf)
        nearest = np.take_along_axis(values, np.argmin(dist, axis=-1), axis=1)
        has = mask.any(axis=1)
        out[has] = nearest[has]
        return out
    k = min(n, values.shape[1])
    ranked = np.full_like(c, np.nan)
    ranked[:, :k] = np.where(mask[:, :k], values[:, :k], np.nan)
    if objective == "ordered":
        return ranked
    np.put_along_axis(out, np.argsort(c, axis=1, kind="stable"), ranked, axis=1)
    return out


def refit_predictor_centers(features: FeatureImage, gt: MultiLayerDepthMap, params: DecompParams,
                            decomp_cfg: DecompConfig, objective: str = "max") -> Tuple[DecompParams, float]:
    """
    Least-squares correction of the predictor center rows

    With D and R fixed the centers are affine in the predictor weights, so moving every
    assigned center onto its target (see assigned_depths) is one minimum-norm lstsq
    solve per predictor. Pixels where a component has no target stay out of its solve.

    Returns:
        tuple: (corrected copy of params, largest |center - target| afterwards)
    """
    if decomp_cfg.center_link != "identity":
        raise InvalidArgumentError("Center refit solves for raw center outputs and needs the identity link")
    out = run_recurrence(features, params, decomp_cfg)
    n = params.n
    centers = out.centers.reshape(-1, n)
    targets = assigned_depths(out.centers, gt, objective)
    refit = params.copy()
    for k in range(refit.W_P.shape[0]):
        slots = [k] if params.per_iteration else range(n)
        blocks, rhs = [], []
        for i in slots:
            ok = np.isfinite(targets[:, i])
            comp = out.tape.steps[i].comp[ok]
            blocks.append(np.hstack([comp, np.ones((comp.shape[0], 1))]))
            rhs.append(targets[ok, i] - centers[ok, i])
        y = np.concatenate(rhs)
        if y.size == 0:
            continue
        delta, *_ = np.linalg.lstsq(np.vstack(blocks), y, rcond=None)
        refit.W_P[k, 0] += delta[:-1]
        refit.b_P[k, 0] += delta[-1]

    after = run_recurrence(features, refit, decomp_cfg).centers.reshape(-1, n)
    ok = np.isfinite(targets)
    residual = float(np.max(np.abs(after[ok] - targets[ok]))) if ok.any() else 0.0
    return refit, residual


def evaluate_params(features: FeatureImage, gt: MultiLayerDepthMap, params: DecompParams,
                    decomp_cfg: DecompConfig, loss_cfg: LossConfig, objective: str = "max") -> LossBreakdown:
    """Loss breakdown of params without gradients"""
    out = run_recurrence(features, params, decomp_cfg)
    breakdown, _, _ = objective_with_grads(out.centers, out.scales, gt, loss_cfg, objective, want_grad=False)
    return breakdown


def fit(features: FeatureImage, gt: MultiLayerDepthMap, fit_cfg: Optional[FitConfig] = None,
        loss_cfg: Optional[LossConfig] = None, decomp_cfg: Optional[DecompConfig] = None,
        params: Optional[DecompParams] = None) -> FitResult:
    """
    Train D, R and P on one image

    Args:
        features: Input features F_0
        gt: Normalized GT map (same H, W)
        fit_cfg: FitConfig
        loss_cfg: LossConfig; its scale clip range overrides decomp_cfg's
        decomp_cfg: DecompConfig
        params: Starting params (fresh init from fit_cfg when None, not modified)

    Returns:
        FitResult: trained params and per-step loss trace

    Raises:
        NumericalError: loss became non-finite
    """
    fit_cfg = fit_cfg or FitConfig()
    loss_cfg = loss_cfg or LossConfig()
    decomp_cfg = replace(decomp_cfg or DecompConfig(),
                         scale_clip_lo=loss_cfg.scale_clip_lo, scale_clip_hi=loss_cfg.scale_clip_hi)
    if not gt.normalized:
        raise InvalidArgumentError("fit expects a normalized GT map (see normalize_scale_invariant)")
    if (gt.height, gt.width) != (features.height, features.width):
        raise InvalidArgumentError("Feature image and GT map sizes differ")

    if params is None:
        params = init_params(features.dim, fit_cfg.component_dim, fit_cfg.n_iterations,
                             seed=fit_cfg.seed, per_iteration=fit_cfg.per_iteration,
                             init_scale=fit_cfg.init_scale)
        if fit_cfg.center_init == "spread":
            params = spread_centers(params, gt, decomp_cfg)
    else:
        params = params.copy()
    arrays = params.arrays()
    opt = AdamW(fit_cfg.lr, fit_cfg.betas, fit_cfg.weight_decay, fit_cfg.eps)
    result = FitResult(params)

    logger.info(f"🔄 Fitting decomposition: {gt.width}x{gt.height}, F={params.feature_dim} "
                f"C={params.component_dim} n={params.n}, objective={fit_cfg.objective}, {fit_cfg.steps} steps")
    for step in range(fit_cfg.steps):
        out = run_recurrence(features, params, decomp_cfg)
        result.max_eta_residual = max(result.max_eta_residual, out.eta_residual)
        result.degenerate_steps += bool(out.degenerate_iterations)
        breakdown, g_c, g_b = objective_with_grads(out.centers, out.scales, gt, loss_cfg, fit_cfg.objective)
        if not np.isfinite(breakdown.total):
            raise NumericalError(f"Loss became non-finite at step {step}", result.trace)
        result.trace.append(breakdown.total)

        grads = backward_recurrence(out.tape, g_c, g_b)
        grads, norm = clip_grad_norm(grads, fit_cfg.grad_clip)
        result.grad_norms.append(norm)
        opt.step(arrays, grads, poly_lr_multiplier(step, fit_cfg.steps, fit_cfg.lr_power))

        if fit_cfg.log_every and step % fit_cfg.log_every == 0:
            logger.debug(f"step {step:5d}  loss={breakdown.total:.6f}  int={breakdown.intensity:.4f} "
                         f"cov={breakdown.coverage:.4f} gm={breakdown.gradient_matching:.4f} |g|={norm:.3e}")

    if fit_cfg.refit_centers:
        params, result.refit_residual = refit_predictor_centers(features, gt, params, decomp_cfg,
                                                                fit_cfg.objective)
        result.params = params
        logger.info(f"🔄 Refit predictor centers: largest residual {result.refit_residual:.2e}")

    result.final = evaluate_params(features, gt, params, decomp_cfg, loss_cfg, fit_cfg.objective)
    logger.info(f"✅ Fit done: final loss {result.final.total:.6f} "
                f"(max eta residual {result.max_eta_residual:.1e})")
    return result


def fit_baseline(features: FeatureImage, gt: MultiLayerDepthMap, fit_cfg: Optional[FitConfig] = None,
                 loss_cfg: Optional[LossConfig] = None, decomp_cfg: Optional[DecompConfig] = None) -> FitResult:
    """Same fit with a single component per pixel"""
    fit_cfg = replace(fit_cfg or FitConfig(), n_iterations=1, per_iteration=False)
    return fit(features, gt, fit_cfg, loss_cfg, decomp_cfg)
