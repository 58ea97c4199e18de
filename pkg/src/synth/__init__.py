"""
Synthetic Scenes Module
Ray-cast layered scenes, feature images, tuple sampling and MLD1 files
"""
from .scene import (
    Camera,
    OverlapParams,
    Scene,
    Surface,
    raycast_multilayer,
    read_scene,
    region_layer_counts,
    scene_overlapping_planes,
    trace_hits,
    write_scene,
)
from .features import load_features, render_features, save_features
from .tuples import (
    SUBSET_ALL,
    SUBSET_MIXED,
    DepthTuple,
    DepthTupleSet,
    TupleSamplingConfig,
    gt_depth,
    make_tuple,
    read_tuples_csv,
    sample_tuples,
    subset_tag,
    write_tuples_csv,
)
from .mld_format import decode_mld, encode_mld, read_mld, write_mld

__all__ = [
    'Camera', 'OverlapParams', 'Scene', 'Surface', 'raycast_multilayer', 'read_scene',
    'region_layer_counts', 'scene_overlapping_planes', 'trace_hits', 'write_scene',
    'load_features', 'render_features', 'save_features',
    'SUBSET_ALL', 'SUBSET_MIXED', 'DepthTuple', 'DepthTupleSet', 'TupleSamplingConfig',
    'gt_depth', 'make_tuple', 'read_tuples_csv', 'sample_tuples', 'subset_tag', 'write_tuples_csv',
    'decode_mld', 'encode_mld', 'read_mld', 'write_mld',
]
