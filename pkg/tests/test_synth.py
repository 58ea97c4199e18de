"""
Synth Tests
Ray-cast ground truth, the overlapping-planes scene, feature images,
MLD1 files, tuple sampling and scene files
"""
import os
import struct
import sys
import tempfile

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.errors import FormatError, InvalidArgumentError
from src.losses import MultiLayerDepthMap
from src.synth import (
    SUBSET_MIXED,
    Camera,
    DepthTupleSet,
    OverlapParams,
    Scene,
    Surface,
    TupleSamplingConfig,
    decode_mld,
    encode_mld,
    gt_depth,
    load_features,
    make_tuple,
    raycast_multilayer,
    read_mld,
    read_scene,
    read_tuples_csv,
    region_layer_counts,
    render_features,
    sample_tuples,
    save_features,
    scene_overlapping_planes,
    subset_tag,
    write_mld,
    write_scene,
    write_tuples_csv,
)
from tests.helpers import module_tests, run_suite


def _expect_format_error(data: bytes) -> FormatError:
    try:
        decode_mld(data)
    except FormatError as e:
        return e
    raise AssertionError("expected FormatError")


def test_full_transparent_plane():
    cam = Camera.centered(8, 6, 8.0)
    gt = raycast_multilayer(Scene(cam, (Surface("p", 2.0),)))
    assert all(v == [2.0] for v in gt.to_lists())


def test_transparent_in_front_of_opaque():
    cam = Camera.centered(5, 5, 5.0)
    gt = raycast_multilayer(Scene(cam, (Surface("back", 3.0, transparent=False), Surface("front", 1.0))))
    assert all(v == [1.0, 3.0] for v in gt.to_lists())


def test_opaque_surface_truncates_ray():
    cam = Camera.centered(4, 4, 4.0)
    scene = Scene(cam, (Surface("wall", 2.0, transparent=False), Surface("hidden", 3.0)))
    assert all(v == [2.0] for v in raycast_multilayer(scene).to_lists())


def test_half_rectangle_matches_containment_oracle():
    cam = Camera.centered(16, 12, 10.0)
    rect = cam.pixel_rect_to_world(0, 8, 0, 12, 1.0)
    scene = Scene(cam, (Surface("half", 1.0, rect), Surface("bg", 4.0, transparent=False)))
    gt = raycast_multilayer(scene)
    x0, x1, y0, y1 = rect
    for v in range(12):
        for u in range(16):
            X = (u + 0.5 - cam.cx) / cam.focal * 1.0
            Y = (v + 0.5 - cam.cy) / cam.focal * 1.0
            inside = x0 <= X < x1 and y0 <= Y < y1
            assert gt.pixel(u, v).tolist() == ([1.0, 4.0] if inside else [4.0])
    assert region_layer_counts(gt) == {1: 96, 2: 96}


def test_overlapping_planes_regions():
    p = OverlapParams()
    gt = raycast_multilayer(scene_overlapping_planes(p))
    assert gt.pixel(25, 30).tolist() == [1.5, 2.5, 4.0]
    assert gt.pixel(40, 50).tolist() == [2.5, 4.0]
    assert gt.pixel(10, 10).tolist() == [1.5, 4.0]
    assert gt.pixel(2, 2).tolist() == [4.0]
    assert gt.pixel(60, 10).tolist() == [5.0]


def test_overlapping_planes_areas_are_analytic():
    p = OverlapParams()
    gt = raycast_multilayer(scene_overlapping_planes(p))

    def area(rect):
        u0, u1, v0, v1 = rect
        return (u1 - u0) * (v1 - v0)

    inter = area(p.overlap())
    both = area(p.front_rect) + area(p.rear_rect)
    expected = {3: inter, 2: both - 2 * inter, 1: p.width * p.height - both + inter}
    assert region_layer_counts(gt) == expected
    assert expected == {1: 2752, 2: 1152, 3: 192}


def test_overlapping_planes_rejects_degenerate_layouts():
    bad = [
        OverlapParams(rear_rect=(32, 44, 24, 56)),
        OverlapParams(z_rear=1.0),
        OverlapParams(background_split=40),
        OverlapParams(background_depths=(4.0, 4.0)),
    ]
    for params in bad:
        try:
            scene_overlapping_planes(params)
            assert False, f"expected InvalidArgumentError for {params}"
        except InvalidArgumentError:
            pass


def test_features_are_additive():
    scene = scene_overlapping_planes()
    img = render_features(scene)
    f = {s.id: np.array(s.feature) for s in scene.surfaces}
    assert np.array_equal(img.data[2, 2], f["background_left"])
    assert np.allclose(img.data[10, 10], f["front"] + f["background_left"], atol=1e-12)
    assert np.allclose(img.data[30, 25], f["front"] + f["rear"] + f["background_left"], atol=1e-12)
    front_only = img.data[8:24, 8:20]
    assert np.all(front_only == front_only[0, 0])


def test_feature_noise_is_seeded():
    scene = scene_overlapping_planes()
    a = render_features(scene, sigma=0.1, seed=4)
    b = render_features(scene, sigma=0.1, seed=4)
    c = render_features(scene, sigma=0.1, seed=5)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_feature_file_round_trip():
    img = render_features(scene_overlapping_planes(OverlapParams(feature_dim=3)), sigma=0.2)
    with tempfile.TemporaryDirectory() as tmp:
        path = save_features(img, os.path.join(tmp, "f.npy"))
        assert np.array_equal(load_features(path).data, img.data)
        bad = os.path.join(tmp, "bad.npy")
        with open(bad, "wb") as f:
            f.write(b"not numpy")
        try:
            load_features(bad)
            assert False, "expected FormatError"
        except FormatError:
            pass


def test_mld_round_trip():
    rng = np.random.default_rng(0)
    lists = [np.cumsum(rng.uniform(0.5, 1.0, rng.integers(0, 5))).astype(np.float32).tolist()
             for _ in range(6 * 7)]
    gt = MultiLayerDepthMap.from_lists(6, 7, lists)
    data = encode_mld(gt)
    back = decode_mld(data)
    assert back.equals(gt)
    assert encode_mld(back) == data
    with tempfile.TemporaryDirectory() as tmp:
        assert read_mld(write_mld(gt, os.path.join(tmp, "gt.mld"))).equals(gt)


def test_mld_empty_pixels():
    gt = MultiLayerDepthMap.from_lists(2, 3, [[]] * 6)
    assert encode_mld(gt) == b"MLD1" + struct.pack("<II", 2, 3) + b"\x00" + b"\x00" * 6


def test_mld_malformed_offsets():
    header = b"MLD1" + struct.pack("<IIB", 1, 1, 0)
    assert _expect_format_error(b"MLDX" + header[4:] + b"\x00").offset == 0
    assert _expect_format_error(header[:7]).offset == 7
    assert _expect_format_error(header).offset == 13
    two = header + b"\x02" + struct.pack("<ff", 2.0, 1.0)
    assert _expect_format_error(two).offset == 18
    assert _expect_format_error(header + b"\x02" + struct.pack("<f", 2.0)).offset == 14
    assert _expect_format_error(header + b"\x00\x00").offset == 14
    assert _expect_format_error(header + b"\x01" + struct.pack("<f", -1.0)).offset == 14


def test_subset_tags():
    assert subset_tag([(0, 0, 1), (1, 0, 1)]) == "Layer1"
    assert subset_tag([(0, 0, 1), (1, 0, 2)]) == SUBSET_MIXED


def test_sampled_tuples_agree_with_gt_lookup():
    gt = raycast_multilayer(scene_overlapping_planes())
    cfg = TupleSamplingConfig(counts={4: 10000}, mixed_fraction=0.5, same_layers=(1,), seed=3)
    tuples = sample_tuples(gt, cfg)
    assert len(tuples) == 10000 and tuples.shortfall == 0
    eps = 0.01 * (5.0 - 1.5)
    for t in tuples.tuples:
        depths = [gt_depth(gt, t.entries[i]) for i in t.order]
        assert all(b - a >= eps for a, b in zip(depths, depths[1:]))
        assert t.subset == subset_tag(t.entries)
    assert {t.subset for t in tuples.tuples} == {"Layer1", SUBSET_MIXED}


def test_infeasible_subset_reports_shortfall():
    gt = raycast_multilayer(scene_overlapping_planes())
    cfg = TupleSamplingConfig(counts={4: 50}, mixed_fraction=0.0, same_layers=(3,), max_batches=3)
    tuples = sample_tuples(gt, cfg)
    assert len(tuples) == 0
    assert tuples.shortfall == 50


def test_tuple_csv_round_trip():
    gt = raycast_multilayer(scene_overlapping_planes())
    tuples = sample_tuples(gt, TupleSamplingConfig(counts={2: 40, 3: 40}, same_layers=(1, 2), seed=1))
    with tempfile.TemporaryDirectory() as tmp:
        back = read_tuples_csv(write_tuples_csv(tuples, os.path.join(tmp, "t.csv")), gt)
    assert len(back) == len(tuples)
    for a, b in zip(tuples.tuples, back.tuples):
        assert [a.entries[i] for i in a.order] == [b.entries[i] for i in b.order]
        assert a.subset == b.subset


def test_tuple_csv_bad_row_reports_line():
    gt = raycast_multilayer(scene_overlapping_planes())
    t = make_tuple(gt, [(2, 2, 1), (25, 30, 1)])
    assert t.order == (1, 0)
    with tempfile.TemporaryDirectory() as tmp:
        path = write_tuples_csv(DepthTupleSet([t]), os.path.join(tmp, "t.csv"))
        with open(path, "a", newline="") as f:
            f.write("2,2,2,9,25,30,1,,,,,,,Mixed\r\n")
        try:
            read_tuples_csv(path, gt)
            assert False, "expected FormatError"
        except FormatError as e:
            assert e.offset == 3


def test_scene_file_round_trip():
    scene = scene_overlapping_planes(OverlapParams(feature_dim=4))
    with tempfile.TemporaryDirectory() as tmp:
        back = read_scene(write_scene(scene, os.path.join(tmp, "scene.cfg")))
    assert back.camera == scene.camera
    assert back.surfaces == scene.surfaces
    assert raycast_multilayer(back).equals(raycast_multilayer(scene))


def run_all_synth_tests() -> bool:
    return run_suite("SYNTH TESTS", module_tests(globals()))


if __name__ == "__main__":
    sys.exit(0 if run_all_synth_tests() else 1)
