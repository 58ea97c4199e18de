"""
Tuple-wise ordering accuracy
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..losses.depth_map import MultiLayerDepthMap
from ..synth.tuples import SUBSET_ALL, DepthTuple, DepthTupleSet
from ..utils.workers import map_chunks

Cell = Tuple[int, str]


@dataclass
class CellAccuracy:
    correct: int = 0
    total: int = 0

    @property
    def accuracy(self) -> Optional[float]:
        return self.correct / self.total if self.total else None


def predicted_depth(pred: MultiLayerDepthMap, x: int, y: int, layer: int) -> Optional[float]:
    """layer-th smallest predicted depth at (x, y), None when the pixel has fewer layers"""
    values = pred.pixel(x, y)
    return float(values[layer - 1]) if 1 <= layer <= values.size else None


def tuple_correct(pred: MultiLayerDepthMap, t: DepthTuple) -> bool:
    """Every pairwise order matches GT strictly; missing predicted layers score False"""
    depths = []
    for i in t.order:
        d = predicted_depth(pred, *t.entries[i])
        if d is None:
            return False
        depths.append(d)
    return all(depths[a] < depths[b] for a in range(len(depths)) for b in range(a + 1, len(depths)))


def tuple_accuracy(pred: MultiLayerDepthMap, tuples: DepthTupleSet, threads: int = 1) -> Dict[Cell, CellAccuracy]:
    """
    Accuracy per (arity, subset) cell, plus an 'All' cell per arity

    Args:
        pred: Predicted map (same size as the GT the tuples were drawn from)
        tuples: DepthTupleSet
        threads: Worker threads

    Returns:
        dict: (arity, subset) -> CellAccuracy; cells without tuples are absent
    """
    def work(chunk: Sequence[DepthTuple]) -> List[bool]:
        return [tuple_correct(pred, t) for t in chunk]

    outcomes = map_chunks(work, tuples.tuples, threads)
    cells: Dict[Cell, CellAccuracy] = {}
    for t, ok in zip(tuples.tuples, outcomes):
        for key in ((t.arity, SUBSET_ALL), (t.arity, t.subset)):
            cell = cells.setdefault(key, CellAccuracy())
            cell.total += 1
            cell.correct += int(ok)
    return dict(sorted(cells.items()))
