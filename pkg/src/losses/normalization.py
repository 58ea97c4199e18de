"""
Scale-invariant depth normalization
t = median(d), s = mean(|d - t|), d~ = (d - t) / s, taken jointly over every layer of an image
"""
from typing import NamedTuple

import numpy as np
from loguru import logger

from ..errors import DegenerateScaleError, InvalidArgumentError
from .depth_map import MultiLayerDepthMap


class Normalized(NamedTuple):
    map: MultiLayerDepthMap
    shift: float
    scale: float


def normalization_params(depths: np.ndarray):
    """
    Median shift and mean-absolute-deviation scale of a set of depths

    Returns:
        tuple: (t, s)
    """
    depths = np.asarray(depths, dtype=np.float64).ravel()
    if depths.size == 0:
        raise InvalidArgumentError("Cannot normalize an empty depth map")
    t = float(np.median(depths))
    s = float(np.mean(np.abs(depths - t)))
    if not s > 0:
        raise DegenerateScaleError("All depths are identical; normalization scale is zero")
    return t, s


def normalize_scale_invariant(d: MultiLayerDepthMap) -> Normalized:
    """
    Normalize a multi-layer depth map

    Args:
        d: Map in raw or normalized units

    Returns:
        Normalized: (normalized map, shift t, scale s)
    """
    t, s = normalization_params(d.all_depths())
    logger.debug(f"Normalization: shift={t:.6g}, scale={s:.6g}")
    return Normalized(d.map_values(lambda v: (v - t) / s, normalized=True), t, s)
