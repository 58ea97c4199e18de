"""
Multi-layer depth maps
Ragged per-pixel sequences of strictly increasing depths
"""
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class MultiLayerDepthMap:
    """
    Per-pixel ground-truth (or predicted) layer depths

    Features:
    - Row-major ragged storage, one float64 array per pixel
    - Strictly increasing depths at every pixel
    - Raw maps hold strictly positive depths; normalized maps may be signed

    Args:
        height: Image rows
        width: Image columns
        layers: H*W arrays in row-major pixel order
        normalized: True when depths live in scale-invariant normalized units
    """

    height: int
    width: int
    layers: Tuple[np.ndarray, ...] = field(repr=False)
    normalized: bool = False

    def __post_init__(self):
        if self.height < 0 or self.width < 0:
            raise InvalidArgumentError(f"Invalid map size {self.height}x{self.width}")
        if len(self.layers) != self.height * self.width:
            raise InvalidArgumentError(
                f"Expected {self.height * self.width} pixel lists, got {len(self.layers)}")
        checked = []
        for idx, values in enumerate(self.layers):
            values = np.asarray(values, dtype=np.float64).ravel()
            if values.size:
                if not np.all(np.isfinite(values)):
                    raise InvalidArgumentError(f"Non-finite depth at pixel {idx}")
                if values.size > 1 and not np.all(np.diff(values) > 0):
                    raise InvalidArgumentError(f"Depths at pixel {idx} are not strictly increasing")
                if not self.normalized and values[0] <= 0:
                    raise InvalidArgumentError(f"Raw depth at pixel {idx} is not positive")
            values.setflags(write=False)
            checked.append(values)
        object.__setattr__(self, "layers", tuple(checked))
        object.__setattr__(self, "_padded_cache", None)

    # -- construction ----------------------------------------------------

    @classmethod
    def from_lists(cls, height: int, width: int, lists: Iterable[Sequence[float]],
                   normalized: bool = False) -> "MultiLayerDepthMap":
        return cls(height, width, tuple(np.asarray(v, dtype=np.float64) for v in lists), normalized)

    # -- accessors -------------------------------------------------------

    @property
    def num_pixels(self) -> int:
        return self.height * self.width

    def pixel(self, x: int, y: int) -> np.ndarray:
        """Depth list at column x, row y"""
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise InvalidArgumentError(f"Pixel ({x}, {y}) outside {self.width}x{self.height}")
        return self.layers[y * self.width + x]

    def layer_counts(self) -> np.ndarray:
        return np.array([v.size for v in self.layers], dtype=np.int64).reshape(self.height, self.width)

    @property
    def max_layers(self) -> int:
        return max((v.size for v in self.layers), default=0)

    def all_depths(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0)
        return np.concatenate(self.layers)

    def padded(self, max_layers: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Dense (H*W, M) copy of the ragged lists

        Returns:
            tuple: (values, mask); padded entries hold 0.0 and mask False
        """
        if self._padded_cache is None:
            full = self.max_layers
            values = np.zeros((self.num_pixels, full), dtype=np.float64)
            mask = np.zeros((self.num_pixels, full), dtype=bool)
            for p, v in enumerate(self.layers):
                values[p, :v.size] = v
                mask[p, :v.size] = True
            values.setflags(write=False)
            mask.setflags(write=False)
            object.__setattr__(self, "_padded_cache", (values, mask))
        values, mask = self._padded_cache
        m = self.max_layers if max_layers is None else max_layers
        if m <= values.shape[1]:
            return values[:, :m].copy(), mask[:, :m].copy()
        extra = m - values.shape[1]
        return (np.pad(values, ((0, 0), (0, extra))),
                np.pad(mask, ((0, 0), (0, extra)), constant_values=False))

    def layer_image(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Image of the index-th nearest layer (0-based)

        Returns:
            tuple: ((H, W) depths with NaN where missing, (H, W) validity mask)
        """
        values, mask = self.padded(max(index + 1, self.max_layers))
        valid = mask[:, index]
        image = np.where(valid, values[:, index], np.nan)
        return image.reshape(self.height, self.width), valid.reshape(self.height, self.width)

    def map_values(self, fn: Callable[[np.ndarray], np.ndarray], normalized: bool) -> "MultiLayerDepthMap":
        """Apply a strictly increasing map to every depth"""
        return MultiLayerDepthMap(self.height, self.width,
                                  tuple(fn(v) for v in self.layers), normalized)

    def equals(self, other: "MultiLayerDepthMap") -> bool:
        return (self.height == other.height and self.width == other.width
                and self.normalized == other.normalized
                and all(np.array_equal(a, b) for a, b in zip(self.layers, other.layers)))

    def to_lists(self) -> List[List[float]]:
        return [v.tolist() for v in self.layers]
