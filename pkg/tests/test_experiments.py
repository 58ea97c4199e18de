"""
Experiment Tests
Desk-scale end-to-end runs: per-pixel recovery, the overlapping-planes fit,
the single-component baseline and the parameterization and loss ablations
"""
import os
import sys
from dataclasses import replace
from functools import lru_cache

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.decomposition import fit_baseline
from src.errors import InvalidArgumentError
from src.experiments import (
    EXPERIMENT_FIT,
    EXPERIMENT_LOSS,
    LOSS_VARIANTS,
    run_loss_ablation,
    run_parameterization_ablation,
    run_pixel_recovery,
)
from tests.helpers import module_tests, run_suite

FIT = replace(EXPERIMENT_FIT, log_every=0)
SEEDS = (0, 1, 2)


@lru_cache(maxsize=None)
def _ablation():
    return run_parameterization_ablation(("max", "ordered"), SEEDS, FIT)


def test_pixel_recovery_two_layers():
    result = run_pixel_recovery((-0.4, 0.4), range(10))
    assert result.successes >= 9, result.layers


def test_two_plane_fit_recovers_layers_every_seed():
    for seed, run in zip(SEEDS, _ablation()["max"]):
        assert run.fit.max_eta_residual < 1e-12, seed
        assert len(run.tuples) == 10000
        assert run.layer_count_match >= 0.95, (seed, run.layer_count_match)
        assert run.quadruplet_accuracy >= 0.95, (seed, run.quadruplet_accuracy)
        assert run.surface_errors["front"] < 0.05 and run.surface_errors["rear"] < 0.05, (seed, run.surface_errors)
        assert run.meets_targets


def test_meets_targets_follows_thresholds():
    run = _ablation()["max"][0]
    assert not replace(run, layer_count_match=0.9).meets_targets
    assert not replace(run, accuracy={}).meets_targets


def test_two_plane_fit_beats_single_component():
    run = _ablation()["max"][0]
    baseline = fit_baseline(run.features, run.normalized.map, FIT, EXPERIMENT_LOSS)
    assert run.fit.final.intensity < baseline.final.intensity


def test_two_plane_fit_is_deterministic():
    run = _ablation()["max"][0]
    again = run_parameterization_ablation(("max",), (0,), FIT)["max"][0]
    assert run.fit.trace == again.fit.trace
    assert run.prediction.equals(again.prediction)


def test_max_mixture_not_worse_than_ordered():
    results = _ablation()
    best = [r.mixed_accuracy for r in results["max"]]
    ordered = [r.mixed_accuracy for r in results["ordered"]]
    assert min(best) >= 0.95, best
    assert np.mean(best) >= np.mean(ordered), (best, ordered)


def test_loss_ablation_runs_every_variant():
    results = run_loss_ablation(seeds=(0,), fit_cfg=replace(FIT, steps=20))
    assert list(results) == list(LOSS_VARIANTS)
    for name, runs in results.items():
        assert len(runs) == 1
        run = runs[0]
        assert np.isfinite(run.fit.final.total), name
        assert len(run.tuples) == 10000
        assert 0.0 <= run.layer_count_match <= 1.0


def test_loss_ablation_rejects_unknown_variant():
    try:
        run_loss_ablation(("l2",), (0,), FIT)
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def run_all_experiments_tests() -> bool:
    return run_suite("EXPERIMENT TESTS", module_tests(globals()))


if __name__ == "__main__":
    sys.exit(0 if run_all_experiments_tests() else 1)
