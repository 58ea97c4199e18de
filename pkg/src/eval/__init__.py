"""
Evaluation Module
Tuple ordering accuracy and scale/shift-aligned point metrics
"""
from .tuples import CellAccuracy, predicted_depth, tuple_accuracy, tuple_correct
from .point_metrics import LayerMatch, PointMetrics, align_scale_shift, matched_layer_values, point_metrics
from .report import EvalReport, evaluate

__all__ = [
    'CellAccuracy', 'predicted_depth', 'tuple_accuracy', 'tuple_correct',
    'LayerMatch', 'PointMetrics', 'align_scale_shift', 'matched_layer_values', 'point_metrics',
    'EvalReport', 'evaluate',
]
