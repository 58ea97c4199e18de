"""
Optimization Module
AdamW, schedules, clipping and direct per-pixel mixture fitting
"""
from .adamw import AdamW, clip_grad_norm, poly_lr_multiplier, project_scales
from .pixel_fit import PixelFitConfig, PixelFitResult, fit_mixture_field

__all__ = [
    'AdamW', 'clip_grad_norm', 'poly_lr_multiplier', 'project_scales',
    'PixelFitConfig', 'PixelFitResult', 'fit_mixture_field',
]
