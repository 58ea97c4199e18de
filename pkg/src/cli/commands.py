"""
Command implementations behind lppd.py
Each command takes the parsed arguments and resolved Settings and returns an exit code.
"""
import argparse
import csv
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict

from loguru import logger

from ..decomposition.params import load_checkpoint, save_checkpoint
from ..decomposition.gradcheck import check_recurrence_gradients
from ..decomposition.recurrence import run_recurrence
from ..decomposition.trainer import fit
from ..errors import NumericalError, UsageError
from ..eval.report import evaluate
from ..experiments import run_loss_ablation, run_parameterization_ablation, run_pixel_recovery, run_two_plane_fit
from ..inference.curves import default_grid, write_curve_csv
from ..inference.peaks import predict_image
from ..losses.depth_map import MultiLayerDepthMap
from ..losses.gradcheck import check_loss_gradients
from ..losses.normalization import Normalized, normalize_scale_invariant
from ..optim.pixel_fit import fit_mixture_field
from ..synth.features import load_features, render_features, save_features
from ..synth.mld_format import read_mld, write_mld
from ..synth.scene import (
    raycast_multilayer,
    read_scene,
    region_layer_counts,
    scene_overlapping_planes,
    write_scene,
)
from ..synth.tuples import read_tuples_csv, sample_tuples, write_tuples_csv
from .artifacts import find_normalization, load_field, save_field, write_normalization, write_trace
from .settings import Settings

EFFECTIVE_CONFIG = "effective_config.cfg"


def _out_dir(path: str, settings: Settings) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    settings.write(out / EFFECTIVE_CONFIG)
    return out


def _normalize(gt: MultiLayerDepthMap) -> Normalized:
    if gt.normalized:
        return Normalized(gt, 0.0, 1.0)
    return normalize_scale_invariant(gt)


def cmd_synth(args: argparse.Namespace, settings: Settings) -> int:
    """Scene, GT map, feature image and tuple CSV"""
    out = _out_dir(args.out, settings)
    scene_file = args.scene or settings.get("synth", "scene_file")
    scene = read_scene(scene_file) if scene_file else scene_overlapping_planes(settings.overlap_params())
    gt = raycast_multilayer(scene)
    features = render_features(scene, settings.get("synth", "noise_sigma"), settings.seed)
    tuples = sample_tuples(gt, settings.tuple_config())

    write_scene(scene, out / "scene.cfg")
    write_mld(gt, out / "gt.mld")
    save_features(features, out / "features.npy")
    write_tuples_csv(tuples, out / "tuples.csv")
    logger.info(f"✅ Synthesized {gt.width}x{gt.height} scene, layer counts {region_layer_counts(gt)}")
    return 0


def cmd_fit_pixel(args: argparse.Namespace, settings: Settings) -> int:
    """Per-pixel mixtures fitted directly to a GT map"""
    out = _out_dir(args.out, settings)
    gt = read_mld(args.gt)
    normalized = _normalize(gt)
    result = fit_mixture_field(normalized.map, settings.pixel_fit_config())

    save_field(result.field, out)
    write_normalization(out / "normalization.cfg", normalized.shift, normalized.scale)
    write_trace(out / "trace.csv", result.trace)
    pred = predict_image(result.field, normalized.shift, normalized.scale, settings.inference_config(),
                         denormalized=not gt.normalized)
    write_mld(pred, out / "pred.mld")
    logger.info(f"✅ Per-pixel fit done, final loss {result.trace[-1] if result.trace else float('nan'):.6f}")
    return 0


def cmd_fit_net(args: argparse.Namespace, settings: Settings) -> int:
    """Train the decomposition end to end on one image"""
    out = _out_dir(args.out, settings)
    features = load_features(args.features)
    normalized = _normalize(read_mld(args.gt))
    start = load_checkpoint(args.init) if args.init else None

    fit_cfg, loss_cfg = settings.fit_config(), settings.loss_config()
    if fit_cfg.objective == "silog":
        loss_cfg = replace(loss_cfg, silog_offset=normalized.shift / normalized.scale)
    result = fit(features, normalized.map, fit_cfg, loss_cfg, settings.decomp_config(), start)
    save_checkpoint(result.params, out / "params.lppd")
    write_normalization(out / "normalization.cfg", normalized.shift, normalized.scale)
    write_trace(out / "trace.csv", result.trace, result.grad_norms)
    if result.final is not None:
        with open(out / "final_loss.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["term", "value"])
            for name, value in result.final.as_dict().items():
                writer.writerow([name, repr(value) if isinstance(value, float) else value])
    return 0


def cmd_infer(args: argparse.Namespace, settings: Settings) -> int:
    """Recurrence, peak extraction and denormalization into an MLD1 file"""
    out_file = Path(args.out)
    _out_dir(str(out_file.parent), settings)
    params = load_checkpoint(args.params)
    features = load_features(args.features)
    norm = find_normalization(args.norm, args.params)
    if norm is None:
        logger.warning("⚠️ No normalization sidecar found; writing normalized depths")

    output = run_recurrence(features, params, settings.decomp_config())
    shift, scale = norm if norm else (0.0, 1.0)
    pred = predict_image(output.field(), shift, scale, settings.inference_config(), denormalized=norm is not None)
    write_mld(pred, out_file)
    logger.info(f"✅ Predicted {len(pred.all_depths())} layer points")
    return 0


def cmd_eval(args: argparse.Namespace, settings: Settings) -> int:
    """Tuple accuracy and aligned point metrics"""
    out = _out_dir(args.out, settings)
    pred = read_mld(args.pred)
    gt = read_mld(args.gt)
    tuples = read_tuples_csv(args.tuples, gt) if args.tuples else None
    report = evaluate(pred, gt, tuples, align=settings.get("eval", "align"),
                      per_layer_alignment=settings.get("eval", "per_layer_alignment"),
                      threads=settings.threads)
    report.to_csv(out / "report.csv")
    print(report.format_table())
    return 0


def cmd_gradcheck(args: argparse.Namespace, settings: Settings) -> int:
    """Finite-difference suites for the loss and recurrence gradients"""
    if args.out:
        _out_dir(args.out, settings)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    logger.info(f"🔍 Gradient checks: seed {settings.seed}, {args.trials} trials per suite")
    reports = check_loss_gradients(settings.seed, args.trials)
    reports += check_recurrence_gradients(settings.seed, args.trials)
    for report in reports:
        print(report.summary())
    failed = [r.name for r in reports if not r.passed]
    if failed:
        raise NumericalError(f"Gradient check failed: {', '.join(failed)}")
    logger.info("✅ All gradient checks passed")
    return 0


def cmd_plot_intensity(args: argparse.Namespace, settings: Settings) -> int:
    """(x, intensity) CSV for one pixel"""
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    if args.mixtures:
        field = load_field(args.mixtures)
        norm = find_normalization(args.norm, Path(args.mixtures) / "centers.npy")
    else:
        if not args.features:
            raise UsageError("--params needs --features")
        features = load_features(args.features)
        field = run_recurrence(features, load_checkpoint(args.params), settings.decomp_config()).field()
        norm = find_normalization(args.norm, args.params)
    if not (0 <= args.x < field.width and 0 <= args.y < field.height):
        raise UsageError(f"Pixel ({args.x}, {args.y}) outside {field.width}x{field.height}")

    mixture = field.mixture_at(args.x, args.y)
    grid = default_grid(mixture, settings.get("plot", "grid_step"), settings.get("plot", "grid_pad"))
    shift, scale = norm if norm else (0.0, 1.0)
    write_curve_csv(mixture, args.out, grid, shift, scale)
    return 0


def cmd_experiment(args: argparse.Namespace, settings: Settings) -> int:
    """Desk-scale experiments, results as CSV"""
    out = _out_dir(args.out, settings)
    if args.name == "pixel-recovery":
        result = run_pixel_recovery(cfg=settings.pixel_fit_config())
        with open(out / "pixel_recovery.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["seed", "recovered", "layers"])
            for seed, ok, layers in zip(result.seeds, result.recovered, result.layers):
                writer.writerow([seed, int(ok), " ".join(repr(d) for d in layers)])
        return 0

    common = dict(params=settings.overlap_params(), loss_cfg=settings.experiment_loss_config(),
                  decomp_cfg=settings.decomp_config(), inference_cfg=settings.inference_config(),
                  tuple_cfg=settings.experiment_tuple_config(),
                  noise_sigma=settings.get("synth", "noise_sigma"))
    if args.name == "two-plane":
        result = run_two_plane_fit(fit_cfg=settings.experiment_fit_config(), **common)
        save_checkpoint(result.fit.params, out / "params.lppd")
        write_mld(result.prediction, out / "pred.mld")
        write_mld(result.gt, out / "gt.mld")
        with open(out / "two_plane.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["metric", "value"])
            writer.writerow(["layer_count_match", repr(result.layer_count_match)])
            for (arity, subset), cell in result.accuracy.items():
                writer.writerow([f"accuracy_{arity}_{subset}", repr(cell.accuracy)])
            for surface, error in result.surface_errors.items():
                writer.writerow([f"center_mae_{surface}", repr(error)])
        return 0

    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as e:
        raise UsageError(f"--seeds expects comma-separated integers: {e}") from e
    fit_cfg = settings.experiment_fit_config()
    if args.name == "loss-ablation":
        results, column = run_loss_ablation(seeds=seeds, fit_cfg=fit_cfg, **common), "variant"
    else:
        results, column = run_parameterization_ablation(seeds=seeds, fit_cfg=fit_cfg, **common), "objective"
    with open(out / f"{args.name.replace('-', '_')}.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([column, "seed", "mixed_accuracy", "quadruplet_accuracy", "layer_count_match"])
        for label, runs in results.items():
            for seed, run in zip(seeds, runs):
                writer.writerow([label, seed, repr(run.mixed_accuracy), repr(run.quadruplet_accuracy),
                                 repr(run.layer_count_match)])
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], int]] = {
    "synth": cmd_synth,
    "fit-pixel": cmd_fit_pixel,
    "fit-net": cmd_fit_net,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "plot-intensity": cmd_plot_intensity,
    "experiment": cmd_experiment,
}
