"""
Intensity Module
Laplace components, max-mixture intensity and its peaks
"""
from .laplace import (
    SCALE_CLIP,
    IntensityMixture,
    LaplaceComponent,
    MixtureRule,
    argmax_component,
    eval_component,
    eval_intensity,
    intensity_curve,
    laplace_density,
    log_intensity,
    log_laplace,
    peak_mask,
    peak_set,
    peaks_from_arrays,
)
from .field import MixtureField, field_log_intensity

__all__ = [
    'SCALE_CLIP', 'IntensityMixture', 'LaplaceComponent', 'MixtureRule',
    'argmax_component', 'eval_component', 'eval_intensity', 'intensity_curve',
    'laplace_density', 'log_intensity', 'log_laplace', 'peak_mask', 'peak_set',
    'peaks_from_arrays', 'MixtureField', 'field_log_intensity',
]
