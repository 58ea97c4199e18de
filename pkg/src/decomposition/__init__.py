"""
Decomposition Module
Recurrent feature decomposition with linear D/R/P maps, backprop and training
"""
from .params import DecompParams, init_params, load_checkpoint, save_checkpoint
from .recurrence import (
    ComponentMap,
    DecompConfig,
    FeatureImage,
    RecurrenceOutput,
    Tape,
    backward_recurrence,
    decompose_step,
    link_outputs,
    run_recurrence,
)
from .trainer import (
    CENTER_INITS,
    FitConfig,
    FitResult,
    assigned_depths,
    evaluate_params,
    fit,
    fit_baseline,
    refit_predictor_centers,
    spread_centers,
)
from .gradcheck import check_recurrence_gradients

__all__ = [
    'DecompParams', 'init_params', 'load_checkpoint', 'save_checkpoint',
    'ComponentMap', 'DecompConfig', 'FeatureImage', 'RecurrenceOutput', 'Tape',
    'backward_recurrence', 'decompose_step', 'link_outputs', 'run_recurrence',
    'CENTER_INITS', 'FitConfig', 'FitResult', 'assigned_depths', 'evaluate_params', 'fit',
    'fit_baseline', 'refit_predictor_centers', 'spread_centers',
    'check_recurrence_gradients',
]
