"""
Inference Module
Peak extraction, suppression and denormalization into multi-layer depth maps
"""
from .peaks import InferenceConfig, denormalize, extract_layers, predict_image, suppress_peaks
from .curves import default_grid, write_curve_csv

__all__ = [
    'InferenceConfig', 'denormalize', 'extract_layers', 'predict_image', 'suppress_peaks',
    'default_grid', 'write_curve_csv',
]
