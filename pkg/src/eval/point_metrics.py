"""
Scale/shift alignment and per-layer point metrics (AbsRel, RMS, delta_1, delta_2)
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..errors import AlignmentError, InvalidArgumentError
from ..losses.depth_map import MultiLayerDepthMap

DELTA_BASE = 1.25


@dataclass
class PointMetrics:
    abs_rel: float
    rms: float
    delta1: float
    delta2: float
    count: int
    excluded: int = 0

    def as_dict(self) -> dict:
        return {"AbsRel": self.abs_rel, "RMS": self.rms, "delta1": self.delta1, "delta2": self.delta2}


@dataclass
class LayerMatch:
    """Values of one layer present in both maps"""

    layer: int
    pred: np.ndarray
    gt: np.ndarray
    excluded: int


def align_scale_shift(pred: np.ndarray, gt: np.ndarray, valid: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """
    Least-squares (s, t) minimizing sum (s * pred + t - gt)^2 over valid entries

    Raises:
        AlignmentError: fewer than 2 valid points or constant predictions
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gt = np.asarray(gt, dtype=np.float64).ravel()
    if pred.shape != gt.shape:
        raise InvalidArgumentError(f"Prediction and GT sizes differ: {pred.size} vs {gt.size}")
    valid = np.ones(pred.shape, dtype=bool) if valid is None else np.asarray(valid, dtype=bool).ravel()
    valid = valid & np.isfinite(pred) & np.isfinite(gt)
    p, g = pred[valid], gt[valid]
    if p.size < 2 or np.all(p == p[0]):
        raise AlignmentError(f"Alignment needs >= 2 points with distinct predictions, got {p.size}")
    a = np.stack([p, np.ones_like(p)], axis=1)
    (s, t), *_ = np.linalg.lstsq(a, g, rcond=None)
    return float(s), float(t)


def _within_ratio(p: np.ndarray, g: np.ndarray, threshold: float) -> np.ndarray:
    # max(p/g, g/p) < threshold, compared by products; p <= 0 is never inside
    return (p > 0) & (p < threshold * g) & (g < threshold * p)


def point_metrics(pred: np.ndarray, gt: np.ndarray) -> PointMetrics:
    """
    AbsRel, RMS and strict delta_i < 1.25^i over matched values

    Entries with gt <= 0 are excluded and counted; non-positive predictions are outliers.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    gt = np.asarray(gt, dtype=np.float64).ravel()
    keep = gt > 0
    excluded = int(np.sum(~keep))
    p, g = pred[keep], gt[keep]
    if p.size == 0:
        return PointMetrics(float("nan"), float("nan"), float("nan"), float("nan"), 0, excluded)
    diff = p - g
    return PointMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        rms=float(np.sqrt(np.mean(diff ** 2))),
        delta1=float(np.mean(_within_ratio(p, g, DELTA_BASE))),
        delta2=float(np.mean(_within_ratio(p, g, DELTA_BASE ** 2))),
        count=int(p.size),
        excluded=excluded,
    )


def matched_layer_values(pred: MultiLayerDepthMap, gt: MultiLayerDepthMap) -> List[LayerMatch]:
    """
    Pair the i-th predicted with the i-th GT depth at each pixel

    Returns:
        list: One LayerMatch per GT/pred layer index (1-based); pixels having the
        layer in only one of the maps are excluded and counted
    """
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise InvalidArgumentError("Prediction and GT maps differ in size")
    layers = max(pred.max_layers, gt.max_layers)
    pv, pm = pred.padded(layers)
    gv, gm = gt.padded(layers)
    out = []
    for i in range(layers):
        both = pm[:, i] & gm[:, i]
        either = pm[:, i] | gm[:, i]
        out.append(LayerMatch(i + 1, pv[both, i], gv[both, i], int(np.sum(either & ~both))))
    return out
