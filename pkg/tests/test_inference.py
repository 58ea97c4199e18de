"""
Inference Tests
Peak filtering and suppression, denormalization, image prediction and curve export
"""
import csv
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import InvalidArgumentError
from src.inference import (
    InferenceConfig,
    default_grid,
    denormalize,
    extract_layers,
    predict_image,
    suppress_peaks,
    write_curve_csv,
)
from src.intensity import IntensityMixture, MixtureField
from src.losses import MultiLayerDepthMap, normalize_scale_invariant
from tests.helpers import module_tests, run_suite


def test_close_peaks_merge_to_smaller_depth():
    m = IntensityMixture.from_arrays([1.0, 1.01], [1.0, 1.0])
    assert extract_layers(m) == [1.0]


def test_separated_peaks_both_kept():
    assert extract_layers(IntensityMixture.from_arrays([1.0, 3.0], [1.0, 1.0])) == [1.0, 3.0]


def test_weak_peak_filtered():
    assert extract_layers(IntensityMixture.from_arrays([2.0], [50.0]), min_peak_intensity=0.05) == []


def test_suppression_radius_boundary():
    assert [d for d, _ in suppress_peaks([(1.0, 0.5), (1.019, 0.4)], 0.02)] == [1.0]
    assert [d for d, _ in suppress_peaks([(1.0, 0.5), (1.021, 0.4)], 0.02)] == [1.0, 1.021]


def test_suppression_keeps_stronger_peak():
    assert suppress_peaks([(1.0, 0.3), (1.01, 0.5)], 0.02) == [(1.01, 0.5)]


def test_extracted_layers_are_peak_subset():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        m = IntensityMixture.from_arrays(rng.uniform(-2, 2, n), rng.uniform(0.5, 5, n))
        layers = extract_layers(m)
        assert layers == sorted(set(layers))
        assert set(layers) <= set(float(d) for d in m.centers)
        assert all(b - a >= 0.02 for a, b in zip(layers, layers[1:]))


def test_suppression_is_idempotent_and_never_adds():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        peaks = list(zip(rng.uniform(-0.1, 0.1, n), rng.uniform(0.05, 1.0, n)))
        once = suppress_peaks(peaks, 0.02)
        assert 1 <= len(once) <= n
        assert suppress_peaks(once, 0.02) == once


def test_extraction_ignores_component_order():
    rng = np.random.default_rng(2)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        centers, scales = rng.uniform(-2, 2, n), rng.uniform(0.5, 5, n)
        layers = extract_layers(IntensityMixture.from_arrays(centers, scales))
        order = rng.permutation(n)
        assert extract_layers(IntensityMixture.from_arrays(centers[order], scales[order])) == layers
        assert len(layers) <= n


def test_denormalize_examples():
    out = denormalize([-1.5, 0.0, 1.5], 2.0, 2.0 / 3.0)
    assert np.allclose(out, [1.0, 2.0, 3.0], atol=1e-12)
    assert denormalize([0.25, 0.5], 0.0, 1.0) == [0.25, 0.5]
    try:
        denormalize([1.0], 0.0, 0.0)
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def test_denormalize_inverts_normalization():
    rng = np.random.default_rng(2)
    lists = [np.cumsum(rng.uniform(0.1, 2.0, rng.integers(1, 4))) for _ in range(20)]
    gt = MultiLayerDepthMap.from_lists(4, 5, lists)
    norm = normalize_scale_invariant(gt)
    for raw, scaled in zip(gt.layers, norm.map.layers):
        back = np.array(denormalize(scaled, norm.shift, norm.scale))
        assert np.all(np.abs(back - raw) <= 1e-12 * np.abs(raw))


def test_uniform_field_gives_constant_layer_count():
    centers = np.broadcast_to([-1.0, 0.0, 1.0], (4, 5, 3)).copy()
    field = MixtureField(centers, np.ones((4, 5, 3)))
    pred = predict_image(field, denormalized=False)
    assert np.all(pred.layer_counts() == 3)
    assert pred.normalized


def test_predict_image_denormalizes_and_drops_nonpositive():
    centers = np.array([[[-3.0, 1.0]]])
    field = MixtureField(centers, np.ones((1, 1, 2)))
    pred = predict_image(field, shift=2.0, scale=1.0)
    assert pred.to_lists() == [[3.0]]
    assert not pred.normalized


def test_threads_do_not_change_prediction():
    rng = np.random.default_rng(1)
    field = MixtureField(rng.uniform(-2, 2, (6, 7, 4)), rng.uniform(1, 3, (6, 7, 4)))
    serial = predict_image(field, 3.0, 0.5)
    threaded = predict_image(field, 3.0, 0.5, InferenceConfig(threads=4))
    assert serial.equals(threaded)


def test_suppression_after_denormalize():
    # 0.03 apart in normalized units, 0.015 apart at scale 0.5
    field = MixtureField(np.array([[[0.0, 0.03]]]), np.ones((1, 1, 2)))
    assert len(predict_image(field, 5.0, 0.5).to_lists()[0]) == 2
    cfg = InferenceConfig(suppress_after_denormalize=True)
    assert predict_image(field, 5.0, 0.5, cfg).to_lists() == [[5.0]]


def test_curve_csv():
    m = IntensityMixture.from_arrays([0.0], [1.0])
    grid = default_grid(m, step=0.5, pad=1.0)
    assert np.allclose(grid, [-1.0, -0.5, 0.0, 0.5, 1.0])
    with tempfile.TemporaryDirectory() as tmp:
        path = write_curve_csv(m, os.path.join(tmp, "curve.csv"), grid, shift=1.0, scale=2.0)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
    assert rows[0] == ["x", "intensity"]
    assert len(rows) == 6
    assert float(rows[3][0]) == 1.0 and float(rows[3][1]) == 0.5


def run_all_inference_tests() -> bool:
    return run_suite("INFERENCE TESTS", module_tests(globals()))


if __name__ == "__main__":
    sys.exit(0 if run_all_inference_tests() else 1)
