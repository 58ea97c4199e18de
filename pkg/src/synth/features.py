"""
Feature images of layered scenes
Each pixel carries the sum of the feature vectors of all surfaces on its ray
"""
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from ..decomposition.recurrence import FeatureImage
from ..errors import FormatError
from .scene import Scene, trace_hits


def render_features(scene: Scene, sigma: float = 0.0, seed: int = 0) -> FeatureImage:
    """
    Superposed per-surface features plus seeded Gaussian noise

    Args:
        scene: Scene whose surfaces carry feature vectors
        sigma: Noise standard deviation (0 disables noise)
        seed: Noise seed

    Returns:
        FeatureImage of shape (H, W, feature_dim)
    """
    features = np.array([s.feature for s in scene.surfaces], dtype=np.float64).reshape(
        len(scene.surfaces), scene.feature_dim)
    data = np.zeros((scene.height * scene.width, scene.feature_dim))
    for p, hits in enumerate(trace_hits(scene)):
        for i in hits:
            data[p] += features[i]
    data = data.reshape(scene.height, scene.width, scene.feature_dim)
    if sigma > 0:
        data = data + np.random.default_rng(seed).normal(0.0, sigma, data.shape)
    return FeatureImage(data)


def save_features(image: FeatureImage, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "wb") as f:
        np.save(f, image.data)
    logger.info(f"💾 Wrote {image.width}x{image.height}x{image.dim} features to {path}")
    return path


def load_features(path: Union[str, Path]) -> FeatureImage:
    """Read a .npy feature image; anything but a finite float (H, W, F) array is rejected"""
    path = Path(path)
    try:
        data = np.load(path, allow_pickle=False)
    except (ValueError, OSError) as e:
        raise FormatError(f"Cannot read feature image {path}: {e}") from e
    if data.ndim != 3 or not np.issubdtype(data.dtype, np.floating):
        raise FormatError(f"Feature image {path} must be a float (H, W, F) array, got {data.dtype} {data.shape}")
    logger.info(f"📥 Loaded features {data.shape} from {path}")
    return FeatureImage(data)
