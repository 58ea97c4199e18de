"""
Layered transparent scenes and exact multi-layer ground truth by ray casting

Surfaces are fronto-parallel (constant z). A rectangle is given in world units
on its own plane; a pixel ray through (u + 0.5, v + 0.5) hits the plane at
X = (u + 0.5 - cx) / f * z, Y = (v + 0.5 - cy) / f * z, and a surface is hit
when x0 <= X < x1 and y0 <= Y < y1.
"""
import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..errors import FormatError, InvalidArgumentError
from ..losses.depth_map import MultiLayerDepthMap

Rect = Tuple[float, float, float, float]


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: focal length and principal point in pixels"""

    focal: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal <= 0 or self.width < 1 or self.height < 1:
            raise InvalidArgumentError(f"Invalid camera {self}")

    @classmethod
    def centered(cls, width: int, height: int, focal: float) -> "Camera":
        return cls(focal, width / 2.0, height / 2.0, width, height)

    def ray_hits(self, z: float) -> Tuple[np.ndarray, np.ndarray]:
        """World X (per column) and Y (per row) where pixel rays meet the plane at depth z"""
        u = np.arange(self.width, dtype=np.float64) + 0.5
        v = np.arange(self.height, dtype=np.float64) + 0.5
        return (u - self.cx) / self.focal * z, (v - self.cy) / self.focal * z

    def pixel_rect_to_world(self, u0: float, u1: float, v0: float, v1: float, z: float) -> Rect:
        """World rectangle at depth z whose hit pixels are exactly u0 <= u + 0.5 < u1, v0 <= v + 0.5 < v1"""
        return ((u0 - self.cx) / self.focal * z, (u1 - self.cx) / self.focal * z,
                (v0 - self.cy) / self.focal * z, (v1 - self.cy) / self.focal * z)


@dataclass(frozen=True)
class Surface:
    """
    One fronto-parallel surface

    Args:
        id: Name
        z: Depth along the optical axis (> 0)
        rect: (x0, x1, y0, y1) on the plane, or None for an infinite plane
        transparent: False terminates the layer list
        feature: Feature vector the surface contributes to every pixel it covers
    """

    id: str
    z: float
    rect: Optional[Rect] = None
    transparent: bool = True
    feature: Tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.z) and self.z > 0):
            raise InvalidArgumentError(f"Surface '{self.id}' depth must be positive, got {self.z}")
        if self.rect is not None:
            x0, x1, y0, y1 = self.rect
            if not (x0 < x1 and y0 < y1):
                raise InvalidArgumentError(f"Surface '{self.id}' has an empty rectangle {self.rect}")
            object.__setattr__(self, "rect", tuple(float(v) for v in self.rect))
        object.__setattr__(self, "feature", tuple(float(v) for v in self.feature))

    def hit_mask(self, camera: Camera) -> np.ndarray:
        """(H, W) pixels whose ray hits the surface"""
        if self.rect is None:
            return np.ones((camera.height, camera.width), dtype=bool)
        xs, ys = camera.ray_hits(self.z)
        x0, x1, y0, y1 = self.rect
        return ((ys >= y0) & (ys < y1))[:, None] & ((xs >= x0) & (xs < x1))[None, :]


@dataclass(frozen=True)
class Scene:
    camera: Camera
    surfaces: Tuple[Surface, ...]
    feature_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "surfaces", tuple(self.surfaces))
        ids = [s.id for s in self.surfaces]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError(f"Duplicate surface ids in {ids}")
        for s in self.surfaces:
            if len(s.feature) != self.feature_dim:
                raise InvalidArgumentError(
                    f"Surface '{s.id}' feature has {len(s.feature)} entries, scene expects {self.feature_dim}")

    @property
    def width(self) -> int:
        return self.camera.width

    @property
    def height(self) -> int:
        return self.camera.height


def trace_hits(scene: Scene) -> List[List[int]]:
    """
    Surfaces met by every pixel ray, nearest first, cut after the first opaque one

    Returns:
        list: Row-major per-pixel lists of surface indices
    """
    order = sorted(range(len(scene.surfaces)), key=lambda i: (scene.surfaces[i].z, i))
    masks = [scene.surfaces[i].hit_mask(scene.camera).ravel() for i in order]
    out: List[List[int]] = []
    for p in range(scene.width * scene.height):
        hits: List[int] = []
        for i, mask in zip(order, masks):
            if not mask[p]:
                continue
            hits.append(i)
            if not scene.surfaces[i].transparent:
                break
        out.append(hits)
    return out


def raycast_multilayer(scene: Scene) -> MultiLayerDepthMap:
    """
    Exact multi-layer GT: sorted z of every surface a pixel ray crosses

    Coincident depths count as one layer.
    """
    lists = []
    for hits in trace_hits(scene):
        depths = np.unique([scene.surfaces[i].z for i in hits])
        lists.append(depths)
    gt = MultiLayerDepthMap.from_lists(scene.height, scene.width, lists)
    logger.debug(f"Ray-cast {scene.width}x{scene.height}: up to {gt.max_layers} layers per pixel")
    return gt


def region_layer_counts(gt: MultiLayerDepthMap) -> dict:
    """Layer count -> number of pixels"""
    counts, pixels = np.unique(gt.layer_counts(), return_counts=True)
    return {int(c): int(n) for c, n in zip(counts, pixels)}


# ---------------------------------------------------------------------------
# Overlapping planes
# ---------------------------------------------------------------------------

@dataclass
class OverlapParams:
    """
    Two partially overlapping transparent planes in front of an opaque background

    Rectangles are pixel ranges (u0, u1, v0, v1), half-open. The background is
    split at column background_split into tiles at background_depths[0] (left)
    and background_depths[1] (right); both planes must lie in the left tile.
    """

    width: int = 64
    height: int = 64
    focal: float = 64.0
    z_front: float = 1.5
    z_rear: float = 2.5
    background_depths: Tuple[float, float] = (4.0, 5.0)
    background_split: int = 48
    front_rect: Tuple[int, int, int, int] = (8, 32, 8, 40)
    rear_rect: Tuple[int, int, int, int] = (20, 44, 24, 56)
    feature_dim: int = 16
    feature_seed: int = 0

    def __post_init__(self):
        self.background_depths = tuple(float(z) for z in self.background_depths)
        self.front_rect = tuple(int(v) for v in self.front_rect)
        self.rear_rect = tuple(int(v) for v in self.rear_rect)

    def overlap(self) -> Optional[Tuple[int, int, int, int]]:
        fu0, fu1, fv0, fv1 = self.front_rect
        ru0, ru1, rv0, rv1 = self.rear_rect
        u0, u1, v0, v1 = max(fu0, ru0), min(fu1, ru1), max(fv0, rv0), min(fv1, rv1)
        if u0 >= u1 or v0 >= v1:
            return None
        return u0, u1, v0, v1


def _is_empty(rect, width: int, height: int) -> bool:
    u0, u1, v0, v1 = rect
    return max(u0, 0) >= min(u1, width) or max(v0, 0) >= min(v1, height)


def scene_overlapping_planes(params: Optional[OverlapParams] = None) -> Scene:
    """
    Scene with 1-, 2- and 3-layer pixel regions

    Raises:
        InvalidArgumentError: empty overlap, equal depths, planes behind the background
    """
    params = params or OverlapParams()
    overlap = params.overlap()
    for rect in (params.front_rect, params.rear_rect, overlap):
        if rect is None or _is_empty(rect, params.width, params.height):
            raise InvalidArgumentError(f"Plane rectangles {params.front_rect} and {params.rear_rect} "
                                       "must be nonempty and overlap inside the image")
    bg_near, bg_far = params.background_depths
    if not params.z_front < params.z_rear < bg_near:
        raise InvalidArgumentError("Depths must satisfy z_front < z_rear < background")
    if bg_near == bg_far:
        raise InvalidArgumentError("Background tiles need distinct depths")
    split = params.background_split
    if not 0 < split <= params.width:
        raise InvalidArgumentError(f"Background split {split} outside (0, {params.width}]")
    if max(params.front_rect[1], params.rear_rect[1]) > split:
        raise InvalidArgumentError("Planes must lie left of the background split")

    camera = Camera.centered(params.width, params.height, params.focal)
    rng = np.random.default_rng(params.feature_seed)

    def feature():
        return tuple(rng.normal(size=params.feature_dim))

    big = 4.0 * (params.width + params.height)
    surfaces = [
        Surface("front", params.z_front,
                camera.pixel_rect_to_world(*params.front_rect, params.z_front), True, feature()),
        Surface("rear", params.z_rear,
                camera.pixel_rect_to_world(*params.rear_rect, params.z_rear), True, feature()),
        Surface("background_left", bg_near,
                camera.pixel_rect_to_world(-big, split, -big, big, bg_near), False, feature()),
    ]
    if split < params.width:
        surfaces.append(Surface("background_right", bg_far,
                                camera.pixel_rect_to_world(split, big, -big, big, bg_far), False, feature()))
    return Scene(camera, tuple(surfaces), params.feature_dim)


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------

def write_scene(scene: Scene, path: Union[str, Path]) -> Path:
    """Write a scene as sectioned key=value text"""
    cfg = configparser.ConfigParser()
    c = scene.camera
    cfg["camera"] = {"focal": repr(c.focal), "cx": repr(c.cx), "cy": repr(c.cy),
                     "width": str(c.width), "height": str(c.height)}
    cfg["features"] = {"dim": str(scene.feature_dim)}
    for s in scene.surfaces:
        cfg[f"surface:{s.id}"] = {
            "z": repr(s.z),
            "rect": "full" if s.rect is None else ", ".join(repr(v) for v in s.rect),
            "transparent": "true" if s.transparent else "false",
            "feature": ", ".join(repr(v) for v in s.feature),
        }
    path = Path(path)
    with open(path, "w") as f:
        cfg.write(f)
    logger.info(f"💾 Wrote scene with {len(scene.surfaces)} surfaces to {path}")
    return path


def _floats(text: str) -> Tuple[float, ...]:
    text = text.strip()
    return tuple(float(v) for v in text.split(",")) if text else ()


def read_scene(path: Union[str, Path]) -> Scene:
    """
    Read a scene file written by write_scene (or by hand)

    Raises:
        FormatError: missing sections/keys or unparsable values
    """
    path = Path(path)
    cfg = configparser.ConfigParser()
    try:
        with open(path) as f:
            cfg.read_file(f)
        cam = cfg["camera"]
        camera = Camera(float(cam["focal"]), float(cam["cx"]), float(cam["cy"]),
                        int(cam["width"]), int(cam["height"]))
        dim = cfg.getint("features", "dim", fallback=0)
        surfaces = []
        for section in cfg.sections():
            if not section.startswith("surface:"):
                continue
            s = cfg[section]
            rect_text = s.get("rect", "full").strip()
            rect = None if rect_text == "full" else _floats(rect_text)
            if rect is not None and len(rect) != 4:
                raise FormatError(f"Surface '{section}' rect needs 4 values")
            surfaces.append(Surface(section.split(":", 1)[1], float(s["z"]), rect,
                                    s.getboolean("transparent", fallback=True), _floats(s.get("feature", ""))))
    except (configparser.Error, KeyError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"Bad scene file {path}: {e}") from e
    logger.info(f"📥 Loaded scene with {len(surfaces)} surfaces from {path}")
    return Scene(camera, tuple(surfaces), dim)
