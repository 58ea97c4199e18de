"""
Loss Tests
Point-process likelihood and coverage, permutation invariance, gradients,
gradient matching, ablation objectives and the combined breakdown
"""
import math
import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import DegenerateScaleError, InvalidArgumentError
from src.intensity import IntensityMixture, MixtureField, MixtureRule
from src.losses import (
    LossConfig,
    MultiLayerDepthMap,
    check_loss_gradients,
    grad_losses,
    gradient_matching_with_grad,
    loss_coverage,
    loss_gradient_matching,
    loss_intensity,
    loss_l1,
    loss_ordered,
    loss_silog,
    loss_total,
    loss_weighted,
    normalize_scale_invariant,
    objective_with_grads,
    pair_components_to_layers,
    silog_terms,
    weighted_terms,
)
from src.utils import central_difference, relative_error
from tests.helpers import module_tests, run_suite

LOG2 = math.log(2.0)


def _random_mixture(rng, n_max=6):
    n = int(rng.integers(1, n_max + 1))
    return IntensityMixture.from_arrays(rng.uniform(-3, 3, n), rng.uniform(0.5, 3, n))


# ---------------------------------------------------------------------------
# Depth maps and normalization
# ---------------------------------------------------------------------------

def test_depth_map_rejects_unsorted_or_nonpositive_raw():
    for bad in ([[2.0, 1.0]], [[1.0, 1.0]], [[-1.0]]):
        try:
            MultiLayerDepthMap.from_lists(1, 1, bad)
        except InvalidArgumentError:
            continue
        raise AssertionError(f"accepted {bad}")
    assert MultiLayerDepthMap.from_lists(1, 1, [[-1.0, 0.5]], normalized=True).max_layers == 2


def test_normalization_example():
    d = MultiLayerDepthMap.from_lists(1, 3, [[1.0], [2.0], [3.0]])
    norm = normalize_scale_invariant(d)
    assert norm.shift == 2.0
    assert abs(norm.scale - 2.0 / 3.0) < 1e-15
    assert np.allclose(norm.map.all_depths(), [-1.5, 0.0, 1.5], atol=1e-12)


def test_normalization_identities():
    rng = np.random.default_rng(0)
    lists = [sorted(rng.choice(np.arange(1, 50), size=rng.integers(0, 4), replace=False) * 0.1 + 0.05)
             for _ in range(40)]
    d = MultiLayerDepthMap.from_lists(5, 8, lists)
    norm = normalize_scale_invariant(d)
    values = norm.map.all_depths()
    assert abs(np.median(values)) < 1e-12
    assert abs(np.mean(np.abs(values)) - 1.0) < 1e-12


def test_normalization_fixed_point():
    d = MultiLayerDepthMap.from_lists(1, 2, [[-1.0], [1.0]], normalized=True)
    norm = normalize_scale_invariant(d)
    assert (norm.shift, norm.scale) == (0.0, 1.0)
    assert norm.map.equals(d)


def test_normalizing_twice_is_identity():
    rng = np.random.default_rng(12)
    lists = [np.sort(rng.uniform(0.5, 20.0, rng.integers(0, 4))) for _ in range(64)]
    once = normalize_scale_invariant(MultiLayerDepthMap.from_lists(8, 8, lists))
    twice = normalize_scale_invariant(once.map)
    assert abs(twice.shift) < 1e-12
    assert abs(twice.scale - 1.0) < 1e-12


def test_normalization_degenerate_scale():
    d = MultiLayerDepthMap.from_lists(1, 2, [[2.0], [2.0]])
    try:
        normalize_scale_invariant(d)
    except DegenerateScaleError:
        return
    raise AssertionError("constant map accepted")


# ---------------------------------------------------------------------------
# Point-process losses
# ---------------------------------------------------------------------------

def test_loss_intensity_closed_forms():
    assert abs(loss_intensity(IntensityMixture.from_arrays([0.3], [1.0]), [0.3]) - LOG2) < 1e-12
    m = IntensityMixture.from_arrays([1.0, 3.0], [1.0, 1.0])
    assert abs(loss_intensity(m, [1.0, 3.0]) - 2 * LOG2) < 1e-12


def test_loss_coverage_closed_forms():
    assert abs(loss_coverage(IntensityMixture.from_arrays([0.3], [1.0]), [0.3]) - LOG2) < 1e-12
    m = IntensityMixture.from_arrays([1.0, 5.0], [1.0, 1.0])
    assert abs(loss_coverage(m, [1.0]) - (2 * LOG2 + 4.0)) < 1e-12


def test_coverage_bounded_below_by_scales():
    rng = np.random.default_rng(13)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        scales = rng.uniform(0.1, 5.0, n)
        m = IntensityMixture.from_arrays(rng.uniform(-2, 2, n), scales)
        gts = rng.uniform(-3, 3, int(rng.integers(1, 5)))
        assert loss_coverage(m, gts) >= np.sum(np.log(2.0 * scales)) - 1e-12


def test_empty_gt_contributes_zero():
    m = IntensityMixture.from_arrays([1.0, 2.0], [1.0, 1.0])
    assert loss_intensity(m, []) == 0.0
    assert loss_coverage(m, []) == 0.0
    g = grad_losses(m, [])
    assert not np.any(g.intensity.as_vector()) and not np.any(g.coverage.as_vector())


def test_far_gt_stays_finite():
    m = IntensityMixture.from_arrays([0.0], [1.0])
    assert math.isfinite(loss_intensity(m, [1e8]))
    assert math.isfinite(loss_coverage(m, [-1e8]))


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        m = _random_mixture(rng)
        gts = rng.uniform(-3, 3, int(rng.integers(1, 6)))
        base_i, base_c = loss_intensity(m, gts), loss_coverage(m, gts)
        mp = m.permuted(rng.permutation(m.n))
        gp = rng.permutation(gts)
        for value, base in ((loss_intensity(mp, gp), base_i), (loss_coverage(mp, gp), base_c)):
            assert abs(value - base) <= 1e-12 * max(1.0, abs(base))


def test_gradients_follow_component_permutation():
    m = IntensityMixture.from_arrays([-1.0, 0.4, 2.0], [1.0, 2.0, 1.5])
    gts = [-0.7, 1.3]
    order = [2, 0, 1]
    g = grad_losses(m, gts)
    gp = grad_losses(m.permuted(order), gts)
    assert np.array_equal(gp.intensity.d_center, g.intensity.d_center[order])
    assert np.array_equal(gp.coverage.d_scale, g.coverage.d_scale[order])


def test_loss_gradients_match_finite_differences():
    reports = check_loss_gradients(seed=11, trials=500)
    assert [r.name for r in reports] == ["loss_intensity", "loss_coverage"]
    for report in reports:
        assert report.passed, report.summary()


def test_gradient_at_kink_uses_zero_sign():
    m = IntensityMixture.from_arrays([1.0], [2.0])
    g = grad_losses(m, [1.0])
    assert g.intensity.d_center[0] == 0.0
    assert g.intensity.d_scale[0] == 0.5


def test_weighted_loss_and_gradient():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        centers, scales = rng.uniform(-2, 2, n), rng.uniform(0.5, 2, n)
        gts = rng.uniform(-2, 2, int(rng.integers(1, 4)))
        if np.min(np.abs(gts[:, None] - centers[None, :])) < 1e-3:
            continue
        m = IntensityMixture.from_arrays(centers, scales, MixtureRule.WEIGHTED_UNIFORM)
        direct = -sum(math.log(np.mean(np.exp(-np.abs(g - centers) / scales) / (2 * scales))) for g in gts)
        assert abs(loss_weighted(m, gts) - direct) < 1e-10

        def fn(theta):
            return loss_weighted(IntensityMixture.from_arrays(theta[:n], theta[n:],
                                                              MixtureRule.WEIGHTED_UNIFORM), gts)

        numeric = central_difference(fn, np.concatenate([centers, scales]))
        terms = weighted_terms(centers[None, :], scales[None, :], np.sort(gts)[None, :],
                               np.ones((1, gts.size), dtype=bool))
        analytic = np.concatenate([terms.grad_centers[0], terms.grad_scales[0]])
        assert relative_error(analytic, numeric) < 1e-4


def test_weighted_loss_needs_weighted_rule():
    try:
        loss_weighted(IntensityMixture.from_arrays([0.0], [1.0]), [0.0])
    except InvalidArgumentError:
        return
    raise AssertionError("max-mixture accepted by loss_weighted")


# ---------------------------------------------------------------------------
# Gradient matching
# ---------------------------------------------------------------------------

def _single_scale_cfg():
    return LossConfig(gm_num_scales=1, gm_scale_weights=(1.0,))


def test_gradient_matching_zero_cases():
    rng = np.random.default_rng(4)
    gt = rng.uniform(-1, 1, (8, 8))
    mask = np.ones((8, 8), dtype=bool)
    assert loss_gradient_matching([gt.copy()], [gt], [mask], LossConfig()).value == 0.0
    shifted = loss_gradient_matching([gt + 3.0], [gt], [mask], LossConfig())
    assert abs(shifted.value) < 1e-12


def test_gradient_matching_ramp_against_brute_force():
    s, k = 6, 0.25
    residual = k * np.tile(np.arange(s, dtype=np.float64), (s, 1))
    mask = np.ones((s, s), dtype=bool)
    value = loss_gradient_matching([residual], [np.zeros((s, s))], [mask], _single_scale_cfg()).value

    brute = 0.0
    for y in range(s):
        for x in range(s):
            if x + 1 < s:
                brute += abs(residual[y, x + 1] - residual[y, x])
            if y + 1 < s:
                brute += abs(residual[y + 1, x] - residual[y, x])
    assert abs(value - brute / (s * s)) < 1e-12
    assert abs(value - k * s * (s - 1) / (s * s)) < 1e-12


def test_gradient_matching_empty_mask_flag():
    gm = loss_gradient_matching([np.zeros((4, 4))], [np.zeros((4, 4))], [np.zeros((4, 4), dtype=bool)],
                                LossConfig())
    assert gm.value == 0.0 and gm.empty


def test_gradient_matching_gradient():
    rng = np.random.default_rng(5)
    pred = rng.normal(size=(8, 8))
    gt = rng.normal(size=(8, 8))
    mask = rng.uniform(size=(8, 8)) > 0.2
    cfg = LossConfig()
    gm = gradient_matching_with_grad([pred], [gt], [mask], cfg)

    def fn(p):
        return loss_gradient_matching([p], [gt], [mask], cfg).value

    assert relative_error(gm.grads[0], central_difference(fn, pred)) < 1e-4


# ---------------------------------------------------------------------------
# Ablation objectives
# ---------------------------------------------------------------------------

def test_ablation_losses():
    assert loss_l1([3.0, 1.0], [1.0, 3.0]).value == 0.0
    ordered = loss_ordered(IntensityMixture.from_arrays([1.0, 2.0, 4.0], [1.0, 1.0, 1.0]), [4.0, 1.0, 2.0])
    assert abs(ordered.value - 3 * LOG2) < 1e-12
    assert ordered.matched == 3 and ordered.ignored == 0
    assert abs(loss_silog([2.0, 4.0, 6.0], [1.0, 2.0, 3.0], variance_weight=1.0).value) < 1e-12
    assert loss_silog([2.0, 4.0], [1.0, 2.0]).value > 0.0


def test_matched_losses_count_unmatched():
    result = loss_l1([1.0, 2.0, 5.0], [1.5])
    assert result.matched == 1 and result.ignored == 2
    assert result.value == 0.5


# ---------------------------------------------------------------------------
# Combined objective
# ---------------------------------------------------------------------------

def _toy_field_and_gt(rng, h=4, w=5, n=3):
    lists = []
    for _ in range(h * w):
        m = int(rng.integers(0, 4))
        lists.append(np.sort(rng.choice(np.linspace(-2, 2, 9), size=m, replace=False)))
    gt = MultiLayerDepthMap.from_lists(h, w, lists, normalized=True)
    field = MixtureField(rng.uniform(-2, 2, (h, w, n)), rng.uniform(1, 3, (h, w, n)))
    return field, gt


def test_loss_total_reduces_to_intensity():
    rng = np.random.default_rng(6)
    field, gt = _toy_field_and_gt(rng)
    total, breakdown = loss_total(field, gt, cfg=LossConfig(lambda_cov=0.0, lambda_gm=0.0))
    per_pixel = [loss_intensity(field.mixture_at(x, y), gt.pixel(x, y))
                 for y in range(gt.height) for x in range(gt.width)]
    assert abs(breakdown.intensity_sum - sum(per_pixel)) < 1e-10
    assert total == breakdown.intensity
    zero, _ = loss_total(field, gt, cfg=LossConfig(lambda_int=0.0, lambda_cov=0.0, lambda_gm=0.0))
    assert zero == 0.0


def test_loss_total_perfect_fit():
    depths = [[-1.0, 0.5], [0.0], [-0.5, 1.0]]
    gt = MultiLayerDepthMap.from_lists(1, 3, depths, normalized=True)
    centers = np.array([[[-1.0, 0.5], [0.0, 0.0], [-0.5, 1.0]]])
    field = MixtureField(centers, np.ones_like(centers))
    _, breakdown = loss_total(field, gt)
    assert abs(breakdown.intensity_sum - 5 * LOG2) < 1e-12
    assert breakdown.contributing_pixels == 3


def test_objective_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    field, gt = _toy_field_and_gt(rng, 3, 3, 2)
    cfg = LossConfig(lambda_gm=0.0)
    for objective in ("max", "weighted", "ordered"):
        _, g_c, g_b = objective_with_grads(field.centers, field.scales, gt, cfg, objective)
        theta = np.concatenate([field.centers.ravel(), field.scales.ravel()])
        k = field.centers.size

        def fn(t):
            c = t[:k].reshape(field.centers.shape)
            b = t[k:].reshape(field.scales.shape)
            return objective_with_grads(c, b, gt, cfg, objective, want_grad=False)[0].total

        numeric = central_difference(fn, theta)
        assert relative_error(np.concatenate([g_c.ravel(), g_b.ravel()]), numeric) < 1e-4, objective


def test_silog_terms_match_single_pixel_loss():
    pred, gt = np.array([[1.5, 0.7, 2.2]]), np.array([[1.0, 2.0]])
    terms = silog_terms(pred, gt, np.ones_like(gt, dtype=bool))
    assert abs(terms.value - loss_silog(pred[0], gt[0]).value) < 1e-12
    assert terms.matched == 2
    assert terms.grad_centers[0, 2] == 0.0


def test_silog_objective_gradient_matches_finite_differences():
    rng = np.random.default_rng(14)
    field, gt = _toy_field_and_gt(rng, 3, 3, 2)
    cfg = LossConfig(lambda_gm=0.0, silog_offset=3.0)
    _, g_c, g_b = objective_with_grads(field.centers, field.scales, gt, cfg, "silog")
    assert not np.any(g_b)

    def fn(c):
        return objective_with_grads(c.reshape(field.centers.shape), field.scales, gt, cfg, "silog",
                                    want_grad=False)[0].total

    assert relative_error(g_c.ravel(), central_difference(fn, field.centers.ravel())) < 1e-4


def test_silog_objective_needs_offset():
    rng = np.random.default_rng(15)
    field, gt = _toy_field_and_gt(rng)
    try:
        objective_with_grads(field.centers, field.scales, gt, LossConfig(lambda_gm=0.0), "silog")
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def test_pairing_is_one_to_one():
    gt = MultiLayerDepthMap.from_lists(1, 2, [[-1.0, 1.0], [-1.0, 1.0]], normalized=True)
    centers = np.array([[[1.0, 5.0, -1.0], [1.0, 5.0, -1.0]]])
    assert pair_components_to_layers(centers, gt) == [(0, 1), (2, 0)]


def run_all_losses_tests() -> bool:
    return run_suite("LOSS TESTS", module_tests(globals()))


if __name__ == "__main__":
    sys.exit(0 if run_all_losses_tests() else 1)
