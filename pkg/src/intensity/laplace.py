"""
Laplace Intensity Functions
Laplace components, their mixtures, and the exact peak structure of the max-mixture
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from ..errors import InvalidArgumentError

# Training-time scale bounds in normalized depth units
SCALE_CLIP = (1.0, 10.0)


class MixtureRule(str, Enum):
    """How component densities combine into the intensity"""

    MAX_MIXTURE = "max"
    WEIGHTED_UNIFORM = "weighted"
    ORDERED = "ordered"


@dataclass(frozen=True)
class LaplaceComponent:
    """
    One Laplace bump on the depth axis

    Args:
        center: Depth of the bump (normalized or metric units)
        scale: Spread, strictly positive
    """

    center: float
    scale: float

    def __post_init__(self):
        if not math.isfinite(self.center):
            raise InvalidArgumentError(f"Component center must be finite, got {self.center}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise InvalidArgumentError(f"Component scale must be positive and finite, got {self.scale}")

    @classmethod
    def for_training(cls, center: float, scale: float,
                     clip: Tuple[float, float] = SCALE_CLIP) -> "LaplaceComponent":
        """Build a component with its scale projected into the training range"""
        lo, hi = clip
        return cls(float(center), float(min(max(scale, lo), hi)))

    @property
    def peak_value(self) -> float:
        return 1.0 / (2.0 * self.scale)


@dataclass(frozen=True)
class IntensityMixture:
    """
    n Laplace components plus the rule that combines them

    Features:
    - MaxMixture: pointwise max (component order is irrelevant)
    - WeightedUniform: uniform average of the densities
    - Ordered: each component stands alone, picked by index
    """

    components: Tuple[LaplaceComponent, ...]
    rule: MixtureRule = MixtureRule.MAX_MIXTURE

    def __post_init__(self):
        if len(self.components) == 0:
            raise InvalidArgumentError("Mixture needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "rule", MixtureRule(self.rule))

    @classmethod
    def from_arrays(cls, centers: Sequence[float], scales: Sequence[float],
                    rule: MixtureRule = MixtureRule.MAX_MIXTURE) -> "IntensityMixture":
        centers = np.asarray(centers, dtype=np.float64).ravel()
        scales = np.asarray(scales, dtype=np.float64).ravel()
        if centers.shape != scales.shape:
            raise InvalidArgumentError(
                f"centers and scales differ in length: {centers.size} vs {scales.size}")
        return cls(tuple(LaplaceComponent(float(d), float(b)) for d, b in zip(centers, scales)), rule)

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.components], dtype=np.float64)

    @property
    def scales(self) -> np.ndarray:
        return np.array([c.scale for c in self.components], dtype=np.float64)

    def permuted(self, order: Sequence[int]) -> "IntensityMixture":
        return IntensityMixture(tuple(self.components[i] for i in order), self.rule)


# ---------------------------------------------------------------------------
# Batch kernels. The single-mixture operations below delegate to these, so the
# per-pixel and per-image paths agree bitwise.
# ---------------------------------------------------------------------------

def log_laplace(x: np.ndarray, centers: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """
    Log density of every component at every query depth

    Args:
        x: (..., M) query depths
        centers: (..., n) component centers
        scales: (..., n) component scales

    Returns:
        (..., M, n) array of -log(2b_j) - |x_i - d_j| / b_j
    """
    x = np.asarray(x, dtype=np.float64)[..., :, None]
    centers = np.asarray(centers, dtype=np.float64)[..., None, :]
    scales = np.asarray(scales, dtype=np.float64)[..., None, :]
    return -np.log(2.0 * scales) - np.abs(x - centers) / scales


def laplace_density(x: np.ndarray, centers: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Linear-space counterpart of log_laplace, same shapes"""
    x = np.asarray(x, dtype=np.float64)[..., :, None]
    centers = np.asarray(centers, dtype=np.float64)[..., None, :]
    scales = np.asarray(scales, dtype=np.float64)[..., None, :]
    return np.exp(-np.abs(x - centers) / scales) / (2.0 * scales)


def peak_mask(centers: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """
    Which components put a local maximum into the max-mixture

    Component i peaks at d_i iff L_i(d_i) >= L_j(d_i) for every other j.

    Args:
        centers: (..., n)
        scales: (..., n)

    Returns:
        (..., n) boolean mask
    """
    centers = np.asarray(centers, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    own = -np.log(2.0 * scales)
    # pair[..., i, j] = log L_j(d_i)
    pair = log_laplace(centers, centers, scales)
    n = centers.shape[-1]
    pair[..., np.arange(n), np.arange(n)] = -np.inf
    rival = pair.max(axis=-1)
    return own >= rival


# ---------------------------------------------------------------------------
# Single-mixture operations
# ---------------------------------------------------------------------------

def _check_depth(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidArgumentError(f"Depth must be finite, got {x}")
    return x


def _check_mixture(m: IntensityMixture) -> None:
    if not isinstance(m, IntensityMixture) or m.n == 0:
        raise InvalidArgumentError("Expected a non-empty IntensityMixture")


def _require_max_rule(m: IntensityMixture) -> None:
    if m.rule is not MixtureRule.MAX_MIXTURE:
        raise InvalidArgumentError(f"Operation needs the max-mixture rule, got {m.rule.value}")


def eval_component(c: LaplaceComponent, x: float) -> float:
    """
    Laplace density of one component

    Args:
        c: Component
        x: Query depth

    Returns:
        float: 1/(2b) * exp(-|x - d| / b)
    """
    x = _check_depth(x)
    if not (math.isfinite(c.scale) and c.scale > 0):
        raise InvalidArgumentError(f"Invalid component scale {c.scale}")
    return math.exp(-abs(x - c.center) / c.scale) / (2.0 * c.scale)


def _selected_index(m: IntensityMixture, index: Optional[int]) -> int:
    if index is None:
        raise InvalidArgumentError("Ordered mixtures are evaluated per component; pass index")
    if not 0 <= index < m.n:
        raise InvalidArgumentError(f"Component index {index} out of range for n={m.n}")
    return int(index)


def eval_intensity(m: IntensityMixture, x: float, index: Optional[int] = None) -> float:
    """
    Evaluate the intensity at a depth

    Args:
        m: Mixture
        x: Query depth
        index: Component to use under the ordered rule (ignored otherwise)

    Returns:
        float: Intensity value
    """
    _check_mixture(m)
    x = _check_depth(x)
    values = laplace_density(np.array([x]), m.centers, m.scales)[0]
    if m.rule is MixtureRule.MAX_MIXTURE:
        return float(values.max())
    if m.rule is MixtureRule.WEIGHTED_UNIFORM:
        return float(values.sum() / m.n)
    return float(values[_selected_index(m, index)])


def log_intensity(m: IntensityMixture, x: float, index: Optional[int] = None) -> float:
    """
    Log of the intensity, computed without leaving log space

    Args:
        m: Mixture
        x: Query depth
        index: Component to use under the ordered rule

    Returns:
        float: log Lambda(x)
    """
    _check_mixture(m)
    x = _check_depth(x)
    terms = log_laplace(np.array([x]), m.centers, m.scales)[0]
    if m.rule is MixtureRule.MAX_MIXTURE:
        return float(terms.max())
    if m.rule is MixtureRule.WEIGHTED_UNIFORM:
        return float(logsumexp(terms) - math.log(m.n))
    return float(terms[_selected_index(m, index)])


def argmax_component(m: IntensityMixture, x: float) -> int:
    """Index of the dominant component at x (ties go to the lowest index)"""
    _check_mixture(m)
    _require_max_rule(m)
    x = _check_depth(x)
    terms = log_laplace(np.array([x]), m.centers, m.scales)[0]
    return int(np.argmax(terms))


def peaks_from_arrays(centers: np.ndarray, scales: np.ndarray,
                      mask: Optional[np.ndarray] = None) -> List[Tuple[float, float]]:
    """Sorted, de-duplicated (depth, intensity) peaks of one max-mixture"""
    if mask is None:
        mask = peak_mask(centers, scales)
    depths = centers[mask]
    heights = 1.0 / (2.0 * scales[mask])
    order = np.lexsort((-heights, depths))
    peaks: List[Tuple[float, float]] = []
    for k in order:
        d = float(depths[k])
        if peaks and peaks[-1][0] == d:
            continue
        peaks.append((d, float(heights[k])))
    return peaks


def peak_set(m: IntensityMixture) -> List[Tuple[float, float]]:
    """
    Every local maximum of the max-mixture

    Args:
        m: Mixture under the max rule

    Returns:
        list: (depth, intensity) pairs sorted by depth, no suppression applied
    """
    _check_mixture(m)
    _require_max_rule(m)
    return peaks_from_arrays(m.centers, m.scales)


def intensity_curve(m: IntensityMixture, grid: np.ndarray, index: Optional[int] = None) -> np.ndarray:
    """
    Sample the intensity on a grid

    Args:
        m: Mixture
        grid: 1-D array of depths
        index: Component for the ordered rule

    Returns:
        numpy array of Lambda(grid)
    """
    _check_mixture(m)
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if not np.all(np.isfinite(grid)):
        raise InvalidArgumentError("Grid contains non-finite depths")
    values = laplace_density(grid, m.centers, m.scales)
    if m.rule is MixtureRule.MAX_MIXTURE:
        return values.max(axis=-1)
    if m.rule is MixtureRule.WEIGHTED_UNIFORM:
        return values.sum(axis=-1) / m.n
    return values[:, _selected_index(m, index)]


if __name__ == "__main__":
    logger.info("Testing Laplace intensity...")

    mixture = IntensityMixture.from_arrays([1.0, 3.0], [1.0, 1.0])
    logger.info(f"Lambda(2) = {eval_intensity(mixture, 2.0):.7f}")
    logger.info(f"log Lambda(2) = {log_intensity(mixture, 2.0):.7f}")
    logger.info(f"Peaks: {peak_set(mixture)}")

    logger.info("✅ Laplace intensity test complete!")
