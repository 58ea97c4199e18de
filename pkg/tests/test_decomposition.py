"""
Decomposition Tests
Residual subtraction, backprop through the recurrence, training and checkpoints
"""
import os
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.decomposition import (
    DecompConfig,
    DecompParams,
    FeatureImage,
    FitConfig,
    assigned_depths,
    backward_recurrence,
    check_recurrence_gradients,
    decompose_step,
    fit,
    init_params,
    link_outputs,
    load_checkpoint,
    refit_predictor_centers,
    run_recurrence,
    save_checkpoint,
    spread_centers,
)
from src.errors import FormatError, InvalidArgumentError, RescaleDegenerateError
from src.intensity import MixtureField
from src.losses import LossConfig, MultiLayerDepthMap, loss_intensity, normalize_scale_invariant
from src.optim import AdamW, clip_grad_norm, poly_lr_multiplier
from tests.helpers import module_tests, run_suite

NO_GM = LossConfig(lambda_gm=0.0)


def _identity_params(dim: int, n: int = 1) -> DecompParams:
    return DecompParams(W_D=np.eye(dim), b_D=np.zeros(dim), W_R=np.eye(dim), b_R=np.zeros(dim),
                        W_P=np.zeros((1, 2, dim)), b_P=np.zeros((1, 2)), n=n)


def _small_gt() -> MultiLayerDepthMap:
    lists = [[1.0, 3.0] if (i % 3) else [2.0] for i in range(16)]
    return normalize_scale_invariant(MultiLayerDepthMap.from_lists(4, 4, lists)).map


def test_eta_from_norms():
    # R = 0.5 * identity, so |R(C)| = |F| / 2
    p = _identity_params(3)
    p.W_R *= 0.5
    f = FeatureImage(np.full((2, 2, 3), 10.0 / np.sqrt(12.0)))
    _, f_next, eta = decompose_step(f, p)
    assert abs(f.norm() - 10.0) < 1e-12
    assert abs(eta - 2.0) < 1e-12
    assert np.allclose(f_next.data, 0.0, atol=1e-12)


def test_identity_maps_explain_everything():
    rng = np.random.default_rng(0)
    f = FeatureImage(rng.normal(size=(3, 4, 5)))
    comp, f_next, eta = decompose_step(f, _identity_params(5))
    assert abs(eta - 1.0) < 1e-12
    assert np.array_equal(comp.data, f.data)
    assert np.allclose(f_next.data, 0.0, atol=1e-12)


def test_eta_identity_every_step():
    rng = np.random.default_rng(1)
    for seed in range(20):
        p = init_params(6, 4, n=4, seed=seed)
        out = run_recurrence(FeatureImage(rng.normal(size=(5, 5, 6))), p)
        assert out.eta_residual < 1e-12
        assert out.degenerate_iterations == []
        for record in out.tape.steps:
            achieved = np.linalg.norm(record.eta * record.remap)
            assert abs(achieved - record.prev_norm) <= 1e-12 * record.prev_norm


def test_degenerate_remap_raises_or_falls_back():
    p = _identity_params(2, n=2)
    p.W_R[:] = 0.0
    f = FeatureImage(np.ones((2, 2, 2)))
    try:
        run_recurrence(f, p)
        assert False, "expected RescaleDegenerateError"
    except RescaleDegenerateError as e:
        assert e.iteration == 1
    out = run_recurrence(f, p, DecompConfig(allow_degenerate=True))
    assert out.etas == [0.0, 0.0]
    assert out.degenerate_iterations == [1, 2]


def test_single_iteration_is_predictor_of_decomposer():
    rng = np.random.default_rng(2)
    p = init_params(4, 3, n=1, seed=5)
    f = FeatureImage(rng.normal(size=(3, 3, 4)))
    out = run_recurrence(f, p)
    raw = (f.flat() @ p.W_D.T + p.b_D) @ p.W_P[0].T + p.b_P[0]
    centers, scales = link_outputs(raw, DecompConfig())
    assert np.allclose(out.centers[..., 0].ravel(), centers, atol=1e-14)
    assert np.allclose(out.scales[..., 0].ravel(), scales, atol=1e-14)
    assert out.n == 1


def test_component_order_does_not_change_intensity_loss():
    rng = np.random.default_rng(3)
    out = run_recurrence(FeatureImage(rng.normal(size=(2, 3, 4))), init_params(4, 3, n=4, seed=1))
    perm = rng.permutation(4)
    field = out.field()
    for y in range(2):
        for x in range(3):
            m = field.mixture_at(x, y)
            gts = rng.uniform(-1, 1, 2)
            assert loss_intensity(m, gts) == loss_intensity(m.permuted(perm), gts)


def test_feature_dim_mismatch_rejected():
    try:
        run_recurrence(FeatureImage(np.zeros((2, 2, 3))), init_params(4, 2))
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def test_zero_upstream_gives_zero_gradients():
    rng = np.random.default_rng(4)
    out = run_recurrence(FeatureImage(rng.normal(size=(3, 3, 4))), init_params(4, 3, n=3, seed=2))
    grads = backward_recurrence(out.tape, np.zeros((3, 3, 3)), np.zeros((3, 3, 3)))
    assert all(not np.any(g) for g in grads.values())


def test_recurrence_gradcheck():
    reports = check_recurrence_gradients(seed=3, trials=100)
    assert all(r.passed for r in reports), [r.summary() for r in reports]


def test_clip_keeps_direction():
    grads = {"a": np.array([3.0, 0.0]), "b": np.array([[4.0]])}
    clipped, norm = clip_grad_norm(grads, 0.1)
    assert abs(norm - 5.0) < 1e-12
    assert np.allclose(clipped["a"], [0.06, 0.0]) and np.allclose(clipped["b"], [[0.08]])
    small = {"a": np.array([0.01, 0.02])}
    same, _ = clip_grad_norm(small, 0.1)
    assert np.array_equal(same["a"], small["a"])


def test_poly_lr_multiplier():
    assert poly_lr_multiplier(0, 100) == 1.0
    assert abs(poly_lr_multiplier(50, 100) - 0.5 ** 0.9) < 1e-15
    assert poly_lr_multiplier(100, 100) == 0.0


def test_adamw_zero_lr_is_noop():
    w = np.array([1.0, -2.0])
    before = w.copy()
    AdamW(0.0).step({"w": w}, {"w": np.array([0.5, 0.5])})
    assert np.array_equal(w, before)


def test_zero_lr_fit_leaves_params_unchanged():
    rng = np.random.default_rng(5)
    features = FeatureImage(rng.normal(size=(4, 4, 4)))
    start = init_params(4, 3, n=2, seed=9)
    result = fit(features, _small_gt(), FitConfig(steps=5, lr=0.0, log_every=0), NO_GM, params=start)
    assert result.params.equals(start)
    assert len(set(result.trace)) == 1


def test_fit_is_deterministic_and_decreases():
    rng = np.random.default_rng(6)
    features = FeatureImage(rng.normal(size=(4, 4, 4)))
    cfg = FitConfig(steps=150, lr=0.05, component_dim=4, n_iterations=3, seed=1, log_every=0)
    a = fit(features, _small_gt(), cfg, NO_GM)
    b = fit(features, _small_gt(), cfg, NO_GM)
    assert a.trace == b.trace
    assert a.params.equals(b.params)
    assert a.trace[-1] < a.trace[0]
    assert a.max_eta_residual < 1e-12


def test_fit_requires_normalized_gt():
    raw = MultiLayerDepthMap.from_lists(1, 1, [[1.0, 2.0]])
    try:
        fit(FeatureImage(np.ones((1, 1, 2))), raw, FitConfig(steps=1))
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def test_spread_init_starts_centers_on_gt_range():
    rng = np.random.default_rng(7)
    features = FeatureImage(rng.normal(size=(4, 4, 4)))
    gt = _small_gt()
    cfg = FitConfig(steps=0, component_dim=3, n_iterations=3, per_iteration=True, center_init="spread",
                    log_every=0)
    result = fit(features, gt, cfg, NO_GM)
    centers = run_recurrence(features, result.params, DecompConfig()).centers
    depths = gt.all_depths()
    expected = np.linspace(depths.min(), depths.max(), 3)
    for i in range(3):
        assert np.allclose(centers[..., i], expected[i], atol=1e-12)


def test_spread_init_needs_identity_link():
    params = init_params(4, 3, n=2, seed=0)
    try:
        spread_centers(params, _small_gt(), DecompConfig(center_link="softplus"))
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass
    try:
        FitConfig(center_init="uniform")
        assert False, "expected InvalidArgumentError"
    except InvalidArgumentError:
        pass


def test_assigned_depths_per_objective():
    centers = np.array([[[-1.0, 0.9, 5.0]]])
    gt = MultiLayerDepthMap.from_lists(1, 1, [[0.0, 1.0]], normalized=True)
    assert np.allclose(assigned_depths(centers, gt, "max"), [[0.0, 1.0, 1.0]])
    ordered = assigned_depths(centers, gt, "ordered")
    assert np.allclose(ordered[0, :2], [0.0, 1.0]) and np.isnan(ordered[0, 2])
    ranked = assigned_depths(centers[..., [2, 0, 1]], gt, "l1")
    assert np.isnan(ranked[0, 0]) and np.allclose(ranked[0, 1:], [0.0, 1.0])


def test_refit_is_exact_when_depths_are_affine_in_components():
    rng = np.random.default_rng(8)
    features = FeatureImage(rng.normal(size=(4, 4, 4)))
    params = init_params(4, 3, n=1, seed=2)
    comp = run_recurrence(features, params, DecompConfig()).tape.steps[0].comp
    depths = comp @ np.array([0.3, -0.2, 0.5]) + 0.1
    gt = MultiLayerDepthMap.from_lists(4, 4, [[d] for d in depths], normalized=True)

    refit, residual = refit_predictor_centers(features, gt, params, DecompConfig(), "ordered")
    assert residual < 1e-9
    centers = run_recurrence(features, refit, DecompConfig()).centers
    assert np.allclose(centers.reshape(-1), depths, atol=1e-9)
    assert np.array_equal(refit.W_D, params.W_D) and np.array_equal(refit.W_R, params.W_R)


def test_checkpoint_round_trip():
    with tempfile.TemporaryDirectory() as tmp:
        for per_iteration in (False, True):
            p = init_params(5, 3, n=4, seed=2, per_iteration=per_iteration)
            path = save_checkpoint(p, os.path.join(tmp, "p.lppd"))
            assert load_checkpoint(path).equals(p)


def _load_error(data: bytes) -> FormatError:
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "bad.lppd")
        with open(path, "wb") as f:
            f.write(data)
        try:
            load_checkpoint(path)
        except FormatError as e:
            return e
    raise AssertionError("expected FormatError")


def test_malformed_checkpoints_report_offsets():
    with tempfile.TemporaryDirectory() as tmp:
        path = save_checkpoint(init_params(2, 2, n=1, seed=0), os.path.join(tmp, "p.lppd"))
        with open(path, "rb") as f:
            good = f.read()
    assert _load_error(b"LPP").offset == 3
    assert _load_error(b"XXXX" + good[4:]).offset == 0
    assert _load_error(good[:4] + (7).to_bytes(4, "little") + good[8:]).offset == 4
    assert _load_error(good[:-8]).offset == len(good) - 8
    assert _load_error(good + b"\x00" * 8).offset == len(good)


def test_field_of_recurrence_output():
    rng = np.random.default_rng(7)
    out = run_recurrence(FeatureImage(rng.normal(size=(2, 2, 3))), init_params(3, 2, n=4, seed=3))
    field = out.field()
    assert isinstance(field, MixtureField)
    assert field.n == 4
    assert np.all(out.scales >= 1.0) and np.all(out.scales <= 10.0)


def run_all_decomposition_tests() -> bool:
    return run_suite("DECOMPOSITION TESTS", module_tests(globals()))


if __name__ == "__main__":
    sys.exit(0 if run_all_decomposition_tests() else 1)
