"""
Intensity curves along the depth axis, for external plotting
"""
import csv
from pathlib import Path
from typing import Optional, Union

import numpy as np
from loguru import logger

from ..errors import InvalidArgumentError
from ..intensity.laplace import IntensityMixture, intensity_curve


def default_grid(m: IntensityMixture, step: float = 1e-2, pad: float = 5.0) -> np.ndarray:
    """[min d - pad * max b, max d + pad * max b] sampled every step"""
    if step <= 0:
        raise InvalidArgumentError("Grid step must be positive")
    spread = pad * float(np.max(m.scales))
    lo = float(np.min(m.centers)) - spread
    hi = float(np.max(m.centers)) + spread
    return np.arange(lo, hi + 0.5 * step, step)


def write_curve_csv(m: IntensityMixture, path: Union[str, Path], grid: Optional[np.ndarray] = None,
                    shift: float = 0.0, scale: float = 1.0) -> Path:
    """
    Write (x, Lambda(x)) rows to CSV

    Args:
        m: Mixture in normalized space
        path: Output CSV
        grid: Normalized sample depths (default_grid when None)
        shift, scale: Map x to metric depth x * scale + shift in the output column
    """
    grid = default_grid(m) if grid is None else np.asarray(grid, dtype=np.float64)
    values = intensity_curve(m, grid)
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "intensity"])
        for x, v in zip(grid * scale + shift, values):
            writer.writerow([repr(float(x)), repr(float(v))])
    logger.info(f"💾 Wrote {grid.size} curve samples to {path}")
    return path
