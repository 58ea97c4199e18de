"""
Losses Module
Point-process likelihood, coverage, gradient matching and ablation objectives
"""
from .depth_map import MultiLayerDepthMap
from .normalization import Normalized, normalization_params, normalize_scale_invariant
from .point_process import (
    LossGradients,
    ParamGrad,
    PixelTerms,
    coverage_terms,
    grad_losses,
    intensity_terms,
    loss_coverage,
    loss_intensity,
    loss_weighted,
    ordered_sum,
    weighted_terms,
)
from .gradient_matching import GradientMatching, gradient_matching_with_grad, loss_gradient_matching
from .ablation import (
    ImageTerms,
    MatchedLoss,
    l1_terms,
    loss_l1,
    loss_ordered,
    loss_silog,
    ordered_terms,
    silog_terms,
)
from .combined import (
    OBJECTIVES,
    LossBreakdown,
    LossConfig,
    loss_total,
    objective_with_grads,
    pair_components_to_layers,
)
from .gradcheck import check_loss_gradients

__all__ = [
    'MultiLayerDepthMap', 'Normalized', 'normalization_params', 'normalize_scale_invariant',
    'LossGradients', 'ParamGrad', 'PixelTerms', 'coverage_terms', 'grad_losses',
    'intensity_terms', 'loss_coverage', 'loss_intensity', 'loss_weighted', 'ordered_sum',
    'weighted_terms', 'GradientMatching', 'gradient_matching_with_grad', 'loss_gradient_matching',
    'ImageTerms', 'MatchedLoss', 'l1_terms', 'loss_l1', 'loss_ordered', 'loss_silog', 'ordered_terms',
    'silog_terms',
    'OBJECTIVES', 'LossBreakdown', 'LossConfig', 'loss_total', 'objective_with_grads',
    'pair_components_to_layers', 'check_loss_gradients',
]
