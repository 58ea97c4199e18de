"""
Full metric report: tuple accuracy cells and aligned per-layer point metrics
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..errors import AlignmentError
from ..losses.depth_map import MultiLayerDepthMap
from ..synth.tuples import DepthTupleSet
from .point_metrics import PointMetrics, align_scale_shift, matched_layer_values, point_metrics
from .tuples import CellAccuracy, tuple_accuracy

CSV_FIELDS = ["section", "arity", "subset", "layer", "metric", "value", "count"]


@dataclass
class EvalReport:
    """
    Args:
        tuples: (arity, subset) -> CellAccuracy
        layers: Layer index (1-based) or 'all' -> PointMetrics of aligned predictions
        alignment: Layer key -> (scale, shift); 'all' for joint alignment
        excluded: Layer -> count of pixels with the layer in only one map
    """

    tuples: Dict[Tuple[int, str], CellAccuracy] = field(default_factory=dict)
    layers: Dict[object, PointMetrics] = field(default_factory=dict)
    alignment: Dict[object, Tuple[float, float]] = field(default_factory=dict)
    excluded: Dict[int, int] = field(default_factory=dict)

    def rows(self):
        for (arity, subset), cell in self.tuples.items():
            yield ["tuple", arity, subset, "", "accuracy", cell.accuracy, cell.total]
        for layer, m in self.layers.items():
            for name, value in m.as_dict().items():
                yield ["point", "", "", layer, name, value, m.count]
        for layer, (s, t) in self.alignment.items():
            yield ["alignment", "", "", layer, "scale", s, ""]
            yield ["alignment", "", "", layer, "shift", t, ""]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_FIELDS)
            for row in self.rows():
                writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        logger.info(f"💾 Wrote metric report to {path}")
        return path

    def format_table(self) -> str:
        lines = ["Tuple accuracy", f"  {'arity':>5}  {'subset':<8} {'acc %':>8} {'n':>7}"]
        for (arity, subset), cell in self.tuples.items():
            lines.append(f"  {arity:>5}  {subset:<8} {100.0 * cell.accuracy:8.2f} {cell.total:7d}")
        lines += ["Point metrics (aligned)",
                  f"  {'layer':>5}  {'AbsRel':>8} {'RMS':>8} {'d1':>6} {'d2':>6} {'n':>7} {'excl':>6}"]
        for layer, m in self.layers.items():
            lines.append(f"  {str(layer):>5}  {m.abs_rel:8.4f} {m.rms:8.4f} {m.delta1:6.3f} "
                         f"{m.delta2:6.3f} {m.count:7d} {self.excluded.get(layer, 0):6d}")
        return "\n".join(lines)


def evaluate(pred: MultiLayerDepthMap, gt: MultiLayerDepthMap, tuples: Optional[DepthTupleSet] = None,
             align: bool = True, per_layer_alignment: bool = False, threads: int = 1) -> EvalReport:
    """
    Compute the whole metric suite on raw depths

    Args:
        pred: Predicted map
        gt: GT map
        tuples: Tuple set for ordering accuracy (skipped when None)
        align: Fit scale and shift before point metrics
        per_layer_alignment: Separate (s, t) per layer instead of one per image
        threads: Worker threads for tuple scoring

    Returns:
        EvalReport
    """
    report = EvalReport()
    if tuples is not None and len(tuples):
        report.tuples = tuple_accuracy(pred, tuples, threads)

    matches = matched_layer_values(pred, gt)
    for m in matches:
        report.excluded[m.layer] = m.excluded
    all_pred = np.concatenate([m.pred for m in matches]) if matches else np.zeros(0)
    all_gt = np.concatenate([m.gt for m in matches]) if matches else np.zeros(0)

    joint = (1.0, 0.0)
    if align and not per_layer_alignment:
        try:
            joint = align_scale_shift(all_pred, all_gt)
        except AlignmentError as e:
            logger.warning(f"⚠️ {e}; using identity alignment")
        report.alignment["all"] = joint

    aligned = []
    for m in matches:
        s, t = joint
        if align and per_layer_alignment:
            try:
                s, t = align_scale_shift(m.pred, m.gt)
            except AlignmentError as e:
                logger.warning(f"⚠️ Layer {m.layer}: {e}; using identity alignment")
                s, t = 1.0, 0.0
            report.alignment[m.layer] = (s, t)
        values = s * m.pred + t
        aligned.append(values)
        if m.pred.size:
            report.layers[m.layer] = point_metrics(values, m.gt)
    if all_pred.size:
        report.layers["all"] = point_metrics(np.concatenate(aligned), all_gt)
    logger.info(f"✅ Evaluated {all_pred.size} matched points and {len(tuples) if tuples else 0} tuples")
    return report
