"""
Decomposer / remapper / predictor weights and their checkpoint file

Checkpoint layout (little-endian):
    b"LPPD" | u32 version | u32 F | u32 C | u32 n |
    f8 W_D (C, F) | f8 b_D (C) | f8 W_R (F, C) | f8 b_R (F) | f8 W_P (K, 2, C) | f8 b_P (K, 2)
Version 1 stores a shared predictor (K = 1); version 2 one predictor per iteration (K = n).
"""
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Union

import numpy as np
from loguru import logger

from ..errors import FormatError, InvalidArgumentError

MAGIC = b"LPPD"
HEADER = struct.Struct("<4sIIII")
PARAM_NAMES = ("W_D", "b_D", "W_R", "b_R", "W_P", "b_P")

# Raw scale bias giving softplus(raw) = 1.5 at initialization
SCALE_BIAS_INIT = float(np.log(np.expm1(1.5)))


@dataclass
class DecompParams:
    """
    Linear maps of the recurrent decomposition

    Args:
        W_D, b_D: Decomposer, features (F) -> component (C)
        W_R, b_R: Remapper, component (C) -> features (F)
        W_P, b_P: Predictor(s), component (C) -> raw (center, scale); shape (K, 2, C) and (K, 2)
        n: Recurrence iterations
    """

    W_D: np.ndarray
    b_D: np.ndarray
    W_R: np.ndarray
    b_R: np.ndarray
    W_P: np.ndarray
    b_P: np.ndarray
    n: int = 4

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.array(getattr(self, name), dtype=np.float64))
        c, f = self.W_D.shape
        k = self.W_P.shape[0]
        expected = {"W_D": (c, f), "b_D": (c,), "W_R": (f, c), "b_R": (f,),
                    "W_P": (k, 2, c), "b_P": (k, 2)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvalidArgumentError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if self.n < 1:
            raise InvalidArgumentError(f"Iteration count must be >= 1, got {self.n}")
        if k not in (1, self.n):
            raise InvalidArgumentError(f"Predictor count {k} must be 1 or n={self.n}")

    @property
    def feature_dim(self) -> int:
        return self.W_D.shape[1]

    @property
    def component_dim(self) -> int:
        return self.W_D.shape[0]

    @property
    def per_iteration(self) -> bool:
        return self.W_P.shape[0] > 1

    def predictor_index(self, iteration: int) -> int:
        """Predictor used at 0-based iteration"""
        return iteration if self.per_iteration else 0

    def arrays(self) -> Dict[str, np.ndarray]:
        """Name -> array references (mutated in place by the optimizer)"""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def zeros_like(self) -> Dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.arrays().items()}

    def copy(self) -> "DecompParams":
        return DecompParams(**{k: v.copy() for k, v in self.arrays().items()}, n=self.n)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for arr in self.arrays().values()])

    def with_vector(self, vector: np.ndarray) -> "DecompParams":
        """New params whose arrays are read from a flat vector in to_vector order"""
        out, offset = {}, 0
        for name, arr in self.arrays().items():
            out[name] = np.asarray(vector[offset:offset + arr.size], dtype=np.float64).reshape(arr.shape)
            offset += arr.size
        return DecompParams(**out, n=self.n)

    def equals(self, other: "DecompParams") -> bool:
        return self.n == other.n and all(
            np.array_equal(a, b) for a, b in zip(self.arrays().values(), other.arrays().values()))


def init_params(feature_dim: int, component_dim: int, n: int = 4, seed: int = 0,
                per_iteration: bool = False, init_scale: float = 1.0) -> DecompParams:
    """
    Small uniform random weights

    Args:
        feature_dim: F
        component_dim: C
        n: Iterations
        seed: RNG seed
        per_iteration: One predictor per iteration instead of a shared one
        init_scale: Weights drawn from U(-a, a) with a = init_scale / sqrt(fan_in)

    Returns:
        DecompParams
    """
    if feature_dim < 1 or component_dim < 1:
        raise InvalidArgumentError("Feature and component dims must be >= 1")
    rng = np.random.default_rng(seed)
    k = n if per_iteration else 1

    def uniform(shape, fan_in):
        a = init_scale / np.sqrt(fan_in)
        return rng.uniform(-a, a, shape)

    b_P = np.zeros((k, 2))
    b_P[:, 1] = SCALE_BIAS_INIT
    return DecompParams(
        W_D=uniform((component_dim, feature_dim), feature_dim),
        b_D=np.zeros(component_dim),
        W_R=uniform((feature_dim, component_dim), component_dim),
        b_R=np.zeros(feature_dim),
        W_P=uniform((k, 2, component_dim), component_dim),
        b_P=b_P,
        n=n,
    )


def save_checkpoint(params: DecompParams, path: Union[str, Path]) -> Path:
    """Write params as an LPPD checkpoint"""
    path = Path(path)
    version = 2 if params.per_iteration else 1
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, version, params.feature_dim, params.component_dim, params.n))
        for arr in params.arrays().values():
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    logger.info(f"💾 Saved checkpoint v{version} to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> DecompParams:
    """
    Read an LPPD checkpoint

    Raises:
        FormatError: bad magic, unknown version, bad dims, truncated or oversized payload
    """
    path = Path(path)
    logger.info(f"📥 Loading checkpoint {path}")
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise FormatError("Truncated checkpoint header", len(data))
    magic, version, f, c, n = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"Bad checkpoint magic {magic!r}", 0)
    if version not in (1, 2):
        raise FormatError(f"Unsupported checkpoint version {version}", 4)
    if f < 1 or c < 1 or n < 1:
        raise FormatError(f"Invalid checkpoint dims F={f} C={c} n={n}", 8)

    k = n if version == 2 else 1
    shapes = {"W_D": (c, f), "b_D": (c,), "W_R": (f, c), "b_R": (f,),
              "W_P": (k, 2, c), "b_P": (k, 2)}
    offset = HEADER.size
    arrays = {}
    for name, shape in shapes.items():
        size = int(np.prod(shape)) * 8
        if offset + size > len(data):
            raise FormatError(f"Truncated checkpoint while reading {name}", len(data))
        arrays[name] = np.frombuffer(data, dtype="<f8", count=size // 8, offset=offset).reshape(shape).astype(np.float64)
        offset += size
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after checkpoint payload", offset)
    return DecompParams(**arrays, n=n)
