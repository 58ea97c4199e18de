"""
Per-pixel intensity fields
Dense (H, W, n) storage of one mixture per pixel
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidArgumentError
from .laplace import IntensityMixture, MixtureRule, log_laplace


@dataclass(frozen=True)
class MixtureField:
    """
    One IntensityMixture per pixel

    Args:
        centers: (H, W, n) component centers
        scales: (H, W, n) component scales, all > 0
        rule: Mixture rule shared by every pixel
    """

    centers: np.ndarray
    scales: np.ndarray
    rule: MixtureRule = MixtureRule.MAX_MIXTURE

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        scales = np.asarray(self.scales, dtype=np.float64)
        if centers.ndim != 3 or centers.shape != scales.shape:
            raise InvalidArgumentError(
                f"Field arrays must share an (H, W, n) shape, got {centers.shape} and {scales.shape}")
        if centers.shape[2] < 1:
            raise InvalidArgumentError("Field needs at least one component per pixel")
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(scales))):
            raise InvalidArgumentError("Field contains non-finite parameters")
        if np.any(scales <= 0):
            raise InvalidArgumentError("Field scales must be strictly positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "rule", MixtureRule(self.rule))

    @property
    def height(self) -> int:
        return self.centers.shape[0]

    @property
    def width(self) -> int:
        return self.centers.shape[1]

    @property
    def n(self) -> int:
        return self.centers.shape[2]

    def mixture_at(self, x: int, y: int) -> IntensityMixture:
        """Mixture of pixel column x, row y"""
        return IntensityMixture.from_arrays(self.centers[y, x], self.scales[y, x], self.rule)

    def flat(self):
        """(H*W, n) views in row-major pixel order"""
        return self.centers.reshape(-1, self.n), self.scales.reshape(-1, self.n)

    def permuted(self, order: Sequence[int]) -> "MixtureField":
        order = list(order)
        if sorted(order) != list(range(self.n)):
            raise InvalidArgumentError(f"{order} is not a permutation of {self.n} components")
        return MixtureField(self.centers[..., order], self.scales[..., order], self.rule)


def field_log_intensity(field: MixtureField, x: np.ndarray) -> np.ndarray:
    """
    Log max-mixture intensity of every pixel at per-pixel query depths

    Args:
        field: Max-mixture field
        x: (H, W, M) depths

    Returns:
        (H, W, M) log intensities
    """
    return log_laplace(x, field.centers, field.scales).max(axis=-1)
