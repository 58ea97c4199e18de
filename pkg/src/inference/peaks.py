"""
Layer extraction from intensity mixtures
Peak detection, close-peak suppression, denormalization and image-level prediction
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError
from ..intensity.field import MixtureField
from ..intensity.laplace import IntensityMixture, peak_mask, peak_set, peaks_from_arrays
from ..losses.depth_map import MultiLayerDepthMap
from ..utils.workers import map_chunks

Peak = Tuple[float, float]


@dataclass
class InferenceConfig:
    """
    Layer-extraction settings

    Args:
        suppression_radius: Peaks closer than this are merged (keep the stronger)
        min_peak_intensity: Peaks below this intensity are dropped
        suppress_after_denormalize: Apply the radius in metric depth instead of normalized depth
        threads: Worker threads for per-pixel work (1 = serial)
    """

    suppression_radius: float = 0.02
    min_peak_intensity: float = 0.05
    suppress_after_denormalize: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.suppression_radius < 0:
            raise InvalidArgumentError("suppression_radius must be >= 0")
        if self.min_peak_intensity < 0:
            raise InvalidArgumentError("min_peak_intensity must be >= 0")


def suppress_peaks(peaks: Sequence[Peak], radius: float) -> List[Peak]:
    """
    Greedy suppression by descending intensity

    A peak is dropped when a stronger kept peak lies less than radius away;
    equal intensities prefer the smaller depth.

    Returns:
        list: Surviving peaks sorted by depth
    """
    order = sorted(peaks, key=lambda p: (-p[1], p[0]))
    kept: List[Peak] = []
    for depth, height in order:
        if all(abs(depth - k) >= radius for k, _ in kept):
            kept.append((depth, height))
    return sorted(kept)


def _filter(peaks: Sequence[Peak], min_peak_intensity: float) -> List[Peak]:
    return [p for p in peaks if p[1] >= min_peak_intensity]


def extract_layers(m: IntensityMixture, suppression_radius: float = 0.02,
                   min_peak_intensity: float = 0.05) -> List[float]:
    """
    Layer depths of one mixture

    Args:
        m: Max-mixture
        suppression_radius: Merge radius
        min_peak_intensity: Intensity cutoff

    Returns:
        list: Strictly increasing layer depths
    """
    peaks = _filter(peak_set(m), min_peak_intensity)
    return [d for d, _ in suppress_peaks(peaks, suppression_radius)]


def denormalize(layers: Sequence[float], t: float, s: float) -> List[float]:
    """d = d_norm * s + t"""
    if not s > 0:
        raise InvalidArgumentError(f"Denormalization scale must be positive, got {s}")
    return [float(v) * s + t for v in layers]


def _pixel_layers(centers: np.ndarray, scales: np.ndarray, mask: np.ndarray,
                  shift: float, scale: float, cfg: InferenceConfig) -> List[float]:
    peaks = _filter(peaks_from_arrays(centers, scales, mask), cfg.min_peak_intensity)
    if cfg.suppress_after_denormalize:
        peaks = [(d * scale + shift, h) for d, h in peaks]
        return [d for d, _ in suppress_peaks(peaks, cfg.suppression_radius)]
    kept = [d for d, _ in suppress_peaks(peaks, cfg.suppression_radius)]
    return denormalize(kept, shift, scale)


def predict_image(field: MixtureField, shift: float = 0.0, scale: float = 1.0,
                  cfg: Optional[InferenceConfig] = None, denormalized: bool = True) -> MultiLayerDepthMap:
    """
    Multi-layer depth prediction of a whole image

    Args:
        field: Per-pixel mixtures in normalized space
        shift, scale: Normalization parameters (t, s) to undo
        cfg: InferenceConfig
        denormalized: Return raw depths (non-positive ones dropped) instead of normalized ones

    Returns:
        MultiLayerDepthMap: ascending depths per pixel
    """
    cfg = cfg or InferenceConfig()
    if not scale > 0:
        raise InvalidArgumentError(f"Denormalization scale must be positive, got {scale}")
    if not denormalized:
        shift, scale = 0.0, 1.0
    centers, scales = field.flat()
    masks = peak_mask(centers, scales)

    def work(indices: Sequence[int]) -> List[List[float]]:
        return [_pixel_layers(centers[p], scales[p], masks[p], shift, scale, cfg) for p in indices]

    layers = map_chunks(work, range(field.height * field.width), cfg.threads)

    dropped = 0
    if denormalized:
        for p, values in enumerate(layers):
            positive = [v for v in values if v > 0]
            dropped += len(values) - len(positive)
            layers[p] = positive
        if dropped:
            logger.warning(f"⚠️ Dropped {dropped} non-positive predicted depths")
    result = MultiLayerDepthMap.from_lists(field.height, field.width, layers, normalized=not denormalized)
    logger.debug(f"Predicted {sum(len(v) for v in layers)} layer points over {len(layers)} pixels")
    return result
