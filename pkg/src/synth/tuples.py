"""
Relative-depth tuples for ordering metrics

A tuple references 2-4 annotated points (pixel x, pixel y, 1-based layer index)
and records their ground-truth depth order. Subset tags: 'Mixed' when the
layers differ, 'Layer<i>' when every point lies on layer i.
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..errors import FormatError, InvalidArgumentError
from ..losses.depth_map import MultiLayerDepthMap

Entry = Tuple[int, int, int]
ARITIES = (2, 3, 4)
SUBSET_ALL = "All"
SUBSET_MIXED = "Mixed"
CSV_HEADER = ["arity"] + [f"{k}{i}" for i in range(1, 5) for k in ("x", "y", "l")] + ["subset"]


def subset_tag(entries: Sequence[Entry]) -> str:
    layers = {e[2] for e in entries}
    return SUBSET_MIXED if len(layers) > 1 else f"Layer{layers.pop()}"


@dataclass(frozen=True)
class DepthTuple:
    """
    Args:
        entries: (x, y, layer) points, layer 1-based
        order: Entry indices sorted by ascending GT depth
        subset: Subset tag
    """

    entries: Tuple[Entry, ...]
    order: Tuple[int, ...]
    subset: str

    @property
    def arity(self) -> int:
        return len(self.entries)


@dataclass
class DepthTupleSet:
    tuples: List[DepthTuple] = field(default_factory=list)
    requested: Dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tuples)

    def by_arity(self, arity: int) -> List[DepthTuple]:
        return [t for t in self.tuples if t.arity == arity]

    @property
    def shortfall(self) -> int:
        """Tuples requested but not sampled"""
        return sum(max(n - len(self.by_arity(a)), 0) for a, n in self.requested.items())


@dataclass
class TupleSamplingConfig:
    """
    Args:
        counts: Tuples per arity
        mixed_fraction: Share of each arity drawn with points on different layers
        same_layers: Layers eligible for same-layer tuples
        eps_sep_fraction: Minimum pairwise GT separation as a fraction of the depth range
        batch_size: Candidates drawn per vectorised batch
        max_batches: Batches tried per (arity, mode) before giving up
        seed: RNG seed
    """

    counts: Dict[int, int] = field(default_factory=lambda: {2: 1000, 3: 1000, 4: 1000})
    mixed_fraction: float = 0.5
    same_layers: Tuple[int, ...] = (1, 3, 5)
    eps_sep_fraction: float = 0.01
    batch_size: int = 4096
    max_batches: int = 200
    seed: int = 0

    def __post_init__(self):
        self.counts = {int(k): int(v) for k, v in self.counts.items()}
        for arity in self.counts:
            if arity not in ARITIES:
                raise InvalidArgumentError(f"Tuple arity must be one of {ARITIES}, got {arity}")
        if not 0.0 <= self.mixed_fraction <= 1.0:
            raise InvalidArgumentError("mixed_fraction must lie in [0, 1]")
        self.same_layers = tuple(int(v) for v in self.same_layers)


def gt_depth(gt: MultiLayerDepthMap, entry: Entry) -> Optional[float]:
    """GT depth of a point, None when the pixel has fewer layers"""
    x, y, layer = entry
    values = gt.pixel(x, y)
    return float(values[layer - 1]) if 1 <= layer <= values.size else None


def make_tuple(gt: MultiLayerDepthMap, entries: Sequence[Entry]) -> DepthTuple:
    """Tuple with its GT order and tag looked up from gt"""
    entries = tuple((int(x), int(y), int(l)) for x, y, l in entries)
    if len(entries) not in ARITIES:
        raise InvalidArgumentError(f"Tuple arity must be one of {ARITIES}, got {len(entries)}")
    depths = []
    for e in entries:
        d = gt_depth(gt, e)
        if d is None:
            raise InvalidArgumentError(f"Tuple entry {e} references a missing GT layer")
        depths.append(d)
    order = tuple(int(i) for i in np.argsort(depths, kind="stable"))
    return DepthTuple(entries, order, subset_tag(entries))


class _Points:
    """Flat table of every annotated (x, y, layer, depth)"""

    def __init__(self, gt: MultiLayerDepthMap):
        values, mask = gt.padded()
        pix, lay = np.nonzero(mask)
        self.x = pix % gt.width
        self.y = pix // gt.width
        self.layer = lay + 1
        self.depth = values[pix, lay]


def _accept(pts: _Points, idx: np.ndarray, eps: float, mixed: bool) -> np.ndarray:
    """Rows of candidate index tuples that are valid"""
    k = idx.shape[1]
    ok = np.ones(idx.shape[0], dtype=bool)
    sorted_idx = np.sort(idx, axis=1)
    ok &= np.all(np.diff(sorted_idx, axis=1) > 0, axis=1)
    depth = np.sort(pts.depth[idx], axis=1)
    if k > 1:
        ok &= np.all(np.diff(depth, axis=1) >= eps, axis=1)
    layers = pts.layer[idx]
    if mixed:
        ok &= np.any(layers != layers[:, :1], axis=1)
    return ok


def _draw(pts: _Points, pool: np.ndarray, arity: int, needed: int, eps: float, mixed: bool,
          rng: np.random.Generator, cfg: TupleSamplingConfig) -> np.ndarray:
    found = []
    total = 0
    if pool.size < arity:
        return np.zeros((0, arity), dtype=np.int64)
    for _ in range(cfg.max_batches):
        if total >= needed:
            break
        cand = pool[rng.integers(0, pool.size, size=(cfg.batch_size, arity))]
        cand = cand[_accept(pts, cand, eps, mixed)]
        found.append(cand[:needed - total])
        total += len(found[-1])
    return np.concatenate(found) if found else np.zeros((0, arity), dtype=np.int64)


def sample_tuples(gt: MultiLayerDepthMap, cfg: Optional[TupleSamplingConfig] = None) -> DepthTupleSet:
    """
    Sample tuples with well-separated GT depths

    Args:
        gt: GT map (raw depths)
        cfg: TupleSamplingConfig

    Returns:
        DepthTupleSet; fewer tuples than requested (with a warning) when the
        GT does not offer enough separated points
    """
    cfg = cfg or TupleSamplingConfig()
    rng = np.random.default_rng(cfg.seed)
    pts = _Points(gt)
    result = DepthTupleSet(requested=dict(cfg.counts))
    if pts.depth.size == 0:
        logger.warning("⚠️ GT map has no annotated points, no tuples sampled")
        return result
    eps = cfg.eps_sep_fraction * float(pts.depth.max() - pts.depth.min())
    everything = np.arange(pts.depth.size)

    for arity, count in sorted(cfg.counts.items()):
        n_mixed = int(round(count * cfg.mixed_fraction))
        plan = [(everything, n_mixed, True)]
        layers = [l for l in cfg.same_layers if np.any(pts.layer == l)]
        same = count - n_mixed
        for i, layer in enumerate(layers):
            share = same // len(layers) + (1 if i < same % len(layers) else 0)
            plan.append((np.nonzero(pts.layer == layer)[0], share, False))
        if not layers and same:
            plan[0] = (everything, count, True)

        drawn = 0
        for pool, needed, mixed in plan:
            if needed <= 0:
                continue
            rows = _draw(pts, pool, arity, needed, eps, mixed, rng, cfg)
            for row in rows:
                entries = [(int(pts.x[i]), int(pts.y[i]), int(pts.layer[i])) for i in row]
                order = tuple(int(i) for i in np.argsort(pts.depth[row], kind="stable"))
                result.tuples.append(DepthTuple(tuple(entries), order, subset_tag(entries)))
            drawn += len(rows)
        if drawn < count:
            logger.warning(f"⚠️ Sampled only {drawn}/{count} tuples of arity {arity} "
                           f"(eps_sep={eps:.4f})")
    logger.info(f"✅ Sampled {len(result)} tuples")
    return result


def write_tuples_csv(tuples: DepthTupleSet, path: Union[str, Path]) -> Path:
    """One row per tuple; entries written in ascending GT order, unused columns empty"""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for t in tuples.tuples:
            row: List[str] = [str(t.arity)]
            for i in range(4):
                if i < t.arity:
                    x, y, l = t.entries[t.order[i]]
                    row += [str(x), str(y), str(l)]
                else:
                    row += ["", "", ""]
            writer.writerow(row + [t.subset])
    logger.info(f"💾 Wrote {len(tuples)} tuples to {path}")
    return path


def read_tuples_csv(path: Union[str, Path], gt: MultiLayerDepthMap) -> DepthTupleSet:
    """
    Read a tuple CSV; orders and tags are recomputed from gt

    Raises:
        FormatError: bad header or row (offset = 1-based line number)
    """
    path = Path(path)
    result = DepthTupleSet()
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise FormatError(f"Unexpected tuple CSV header {header}", 1, unit="line")
        for line, row in enumerate(reader, start=2):
            try:
                arity = int(row[0])
                if arity not in ARITIES or len(row) != len(CSV_HEADER):
                    raise ValueError(f"bad arity {arity} or column count {len(row)}")
                entries = [(int(row[1 + 3 * i]), int(row[2 + 3 * i]), int(row[3 + 3 * i]))
                           for i in range(arity)]
                result.tuples.append(make_tuple(gt, entries))
            except (ValueError, IndexError) as e:
                raise FormatError(f"Bad tuple row in {path}: {e}", line, unit="line") from e
    for t in result.tuples:
        result.requested[t.arity] = result.requested.get(t.arity, 0) + 1
    logger.info(f"📥 Loaded {len(result)} tuples from {path}")
    return result
