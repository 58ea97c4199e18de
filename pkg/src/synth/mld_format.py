"""
MLD1 multi-layer depth files

    b"MLD1" | u32 H | u32 W | u8 flag (0 raw, 1 normalized) |
    per pixel, row-major: u8 m, then m float32 depths, strictly increasing
All integers and floats little-endian.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from ..errors import FormatError, InvalidArgumentError
from ..losses.depth_map import MultiLayerDepthMap

MAGIC = b"MLD1"
HEADER = struct.Struct("<4sIIB")
MAX_LAYERS = 255


def encode_mld(depth_map: MultiLayerDepthMap) -> bytes:
    """Serialize a map; depths are stored as float32"""
    out = bytearray(HEADER.pack(MAGIC, depth_map.height, depth_map.width, int(depth_map.normalized)))
    for p, values in enumerate(depth_map.layers):
        if values.size > MAX_LAYERS:
            raise InvalidArgumentError(f"Pixel {p} has {values.size} layers, MLD1 stores at most {MAX_LAYERS}")
        stored = values.astype("<f4")
        if stored.size > 1 and not np.all(np.diff(stored) > 0):
            raise InvalidArgumentError(f"Depths at pixel {p} are not strictly increasing in float32")
        if not depth_map.normalized and stored.size and stored[0] <= 0:
            raise InvalidArgumentError(f"Raw depth at pixel {p} rounds to a non-positive float32")
        out.append(stored.size)
        out += stored.tobytes()
    return bytes(out)


def decode_mld(data: bytes) -> MultiLayerDepthMap:
    """
    Parse MLD1 bytes

    Raises:
        FormatError: with the byte offset of the first problem
    """
    if len(data) < HEADER.size:
        if data[:len(MAGIC)] != MAGIC[:len(data)]:
            raise FormatError("Bad MLD1 magic", 0)
        raise FormatError("Truncated MLD1 header", len(data))
    magic, height, width, flag = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"Bad MLD1 magic {magic!r}", 0)
    if flag not in (0, 1):
        raise FormatError(f"Unknown normalization flag {flag}", 12)
    normalized = flag == 1

    offset = HEADER.size
    lists = []
    for _ in range(height * width):
        if offset >= len(data):
            raise FormatError("Truncated MLD1 payload: missing layer count", offset)
        m = data[offset]
        offset += 1
        end = offset + 4 * m
        if end > len(data):
            raise FormatError(f"Truncated MLD1 payload: {m} depths announced", offset)
        values = np.frombuffer(data, dtype="<f4", count=m, offset=offset)
        if not np.all(np.isfinite(values)):
            bad = int(np.argmin(np.isfinite(values)))
            raise FormatError("Non-finite depth", offset + 4 * bad)
        if m > 1:
            steps = np.diff(values) > 0
            if not np.all(steps):
                bad = int(np.argmin(steps)) + 1
                raise FormatError("Depths are not strictly increasing", offset + 4 * bad)
        if not normalized and m and values[0] <= 0:
            raise FormatError("Raw depth is not positive", offset)
        lists.append(values.astype(np.float64))
        offset = end
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after MLD1 payload", offset)
    return MultiLayerDepthMap(height, width, tuple(lists), normalized)


def write_mld(depth_map: MultiLayerDepthMap, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(encode_mld(depth_map))
    logger.info(f"💾 Wrote MLD1 {depth_map.width}x{depth_map.height} to {path}")
    return path


def read_mld(path: Union[str, Path]) -> MultiLayerDepthMap:
    path = Path(path)
    depth_map = decode_mld(path.read_bytes())
    logger.info(f"📥 Loaded MLD1 {depth_map.width}x{depth_map.height} from {path}")
    return depth_map
