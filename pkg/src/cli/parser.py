"""
Argument parsing for lppd.py
"""
import argparse

from ..errors import UsageError

EXPERIMENTS = ("pixel-recovery", "two-plane", "ablation", "loss-ablation")


class LppdArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    common = LppdArgumentParser(add_help=False)
    common.add_argument("--config", help="Sectioned key=value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override one setting (repeatable)")
    common.add_argument("--seed", type=int, help="Shortcut for --set run.seed=N")
    common.add_argument("--threads", type=int, help="Worker threads (1 = serial)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    return common


def build_parser() -> LppdArgumentParser:
    common = _common()
    parser = LppdArgumentParser(prog="lppd.py", description="Point-process multi-layer depth toolkit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("synth", parents=[common], help="Ray-cast a scene into GT, features and tuples")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--scene", help="Scene file to render instead of the overlapping planes")

    p = sub.add_parser("fit-pixel", parents=[common], help="Fit one mixture per pixel to a GT map")
    p.add_argument("--gt", required=True, help="GT MLD1 file")
    p.add_argument("--out", required=True, help="Output directory")

    p = sub.add_parser("fit-net", parents=[common], help="Train the recurrent decomposition on one image")
    p.add_argument("--features", required=True, help="Feature image (.npy)")
    p.add_argument("--gt", required=True, help="GT MLD1 file")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--init", help="Checkpoint to start from")

    p = sub.add_parser("infer", parents=[common], help="Predict a multi-layer depth map")
    p.add_argument("--params", required=True, help="Decomposition checkpoint")
    p.add_argument("--features", required=True, help="Feature image (.npy)")
    p.add_argument("--out", required=True, help="Output MLD1 file")
    p.add_argument("--norm", help="Normalization sidecar (default: next to the checkpoint)")

    p = sub.add_parser("eval", parents=[common], help="Score a prediction against GT")
    p.add_argument("--pred", required=True, help="Predicted MLD1 file")
    p.add_argument("--gt", required=True, help="GT MLD1 file")
    p.add_argument("--tuples", help="Tuple CSV")
    p.add_argument("--out", required=True, help="Output directory")

    p = sub.add_parser("gradcheck", parents=[common], help="Finite-difference gradient suites")
    p.add_argument("--trials", type=int, default=500, help="Instances per suite")
    p.add_argument("--out", help="Directory for the effective config")

    p = sub.add_parser("plot-intensity", parents=[common], help="Intensity curve CSV of one pixel")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--params", help="Decomposition checkpoint (needs --features)")
    source.add_argument("--mixtures", help="Output directory of fit-pixel")
    p.add_argument("--features", help="Feature image (.npy)")
    p.add_argument("--norm", help="Normalization sidecar")
    p.add_argument("--x", type=int, required=True, help="Pixel column")
    p.add_argument("--y", type=int, required=True, help="Pixel row")
    p.add_argument("--out", required=True, help="Output CSV")

    p = sub.add_parser("experiment", parents=[common], help="Run a desk-scale experiment")
    p.add_argument("--name", required=True, choices=EXPERIMENTS)
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seeds", default="0,1,2", help="Comma-separated seeds (ablation, loss-ablation)")
    return parser


def settings_overrides(args: argparse.Namespace) -> list:
    """--set entries plus the --seed/--threads shortcuts, shortcuts last"""
    overrides = list(args.overrides or [])
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    return overrides
