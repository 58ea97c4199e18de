"""
Small run artifacts shared by the commands: normalization sidecars, loss traces, fitted fields
"""
import configparser
import csv
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..errors import FormatError
from ..intensity.field import MixtureField

NORMALIZATION_FILE = "normalization.cfg"
CENTERS_FILE = "centers.npy"
SCALES_FILE = "scales.npy"


def write_normalization(path: Union[str, Path], shift: float, scale: float) -> Path:
    cfg = configparser.ConfigParser()
    cfg["normalization"] = {"shift": repr(float(shift)), "scale": repr(float(scale))}
    path = Path(path)
    with open(path, "w") as f:
        cfg.write(f)
    return path


def read_normalization(path: Union[str, Path]) -> Tuple[float, float]:
    """(shift, scale) written by write_normalization"""
    cfg = configparser.ConfigParser()
    try:
        with open(path) as f:
            cfg.read_file(f)
        return float(cfg["normalization"]["shift"]), float(cfg["normalization"]["scale"])
    except (OSError, KeyError, ValueError, configparser.Error) as e:
        raise FormatError(f"Cannot read normalization file {path}: {e}") from e


def find_normalization(explicit: Optional[str], beside: Union[str, Path]) -> Optional[Tuple[float, float]]:
    """Explicit sidecar, else normalization.cfg next to `beside`, else None"""
    if explicit:
        return read_normalization(explicit)
    candidate = Path(beside).parent / NORMALIZATION_FILE
    if candidate.is_file():
        logger.info(f"📥 Using normalization from {candidate}")
        return read_normalization(candidate)
    return None


def write_trace(path: Union[str, Path], losses: Sequence[float], grad_norms: Sequence[float] = ()) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss", "grad_norm"] if grad_norms else ["step", "loss"])
        for step, loss in enumerate(losses):
            row = [step, repr(float(loss))]
            if grad_norms:
                row.append(repr(float(grad_norms[step])))
            writer.writerow(row)
    return path


def save_field(field: MixtureField, directory: Union[str, Path]) -> None:
    directory = Path(directory)
    np.save(directory / CENTERS_FILE, field.centers)
    np.save(directory / SCALES_FILE, field.scales)
    logger.info(f"💾 Wrote {field.width}x{field.height} mixtures (n={field.n}) to {directory}")


def load_field(directory: Union[str, Path]) -> MixtureField:
    directory = Path(directory)
    try:
        centers = np.load(directory / CENTERS_FILE, allow_pickle=False)
        scales = np.load(directory / SCALES_FILE, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise FormatError(f"Cannot read fitted mixtures from {directory}: {e}") from e
    if centers.ndim != 3 or centers.shape != scales.shape:
        raise FormatError(f"Mixture arrays in {directory} must share an (H, W, n) shape")
    return MixtureField(centers, scales)
