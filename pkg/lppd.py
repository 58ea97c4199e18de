#!/usr/bin/env python3
"""
LPPD - Layered Point-Process Depth toolkit
Main entry point

Usage:
    python lppd.py synth --out runs/scene           # Ray-cast the overlapping-planes scene
    python lppd.py fit-net --features ... --gt ...  # Train the recurrent decomposition
    python lppd.py gradcheck --seed 7               # Finite-difference gradient suites
"""
import sys
from typing import List, Optional

from loguru import logger

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>"


def configure_logging(level: str = "INFO"):
    """Single stderr sink in the house format"""
    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level=level)


def print_banner():
    """Print LPPD banner"""
    banner = """
╔══════════════════════════════════════════════════════════════╗
║                                                              ║
║   ██╗     ██████╗ ██████╗ ██████╗                            ║
║   ██║     ██╔══██╗██╔══██╗██╔══██╗                           ║
║   ██║     ██████╔╝██████╔╝██║  ██║                           ║
║   ██║     ██╔═══╝ ██╔═══╝ ██║  ██║                           ║
║   ███████╗██║     ██║     ██████╔╝                           ║
║   ╚══════╝╚═╝     ╚═╝     ╚═════╝                            ║
║                                                              ║
║         Layered Point-Process Depth                          ║
║         Max-Mixture Intensities • Multi-Layer Maps           ║
║                                                              ║
╚══════════════════════════════════════════════════════════════╝

    📈 Intensity: Laplace max-mixture per pixel
    🧮 Losses: likelihood + coverage + gradient matching
    🔁 Decomposition: recurrent, linear D/R/P
"""
    print(banner)


def print_usage():
    """Print usage information"""
    usage = """
Usage: python lppd.py <command> [options]

Commands:
  synth           Ray-cast a scene into GT (MLD1), features (.npy) and tuples (CSV)
  fit-pixel       Fit one Laplace mixture per pixel directly to a GT map
  fit-net         Train the recurrent decomposition on one image
  infer           Predict a multi-layer depth map from a checkpoint
  eval            Tuple accuracy and aligned point metrics
  gradcheck       Finite-difference checks of every analytic gradient
  plot-intensity  Intensity curve of one pixel as CSV
  experiment      pixel-recovery | two-plane | ablation | loss-ablation

Common options:
  --config FILE            Sectioned key=value settings
  --set SECTION.KEY=VALUE  Override one setting (repeatable; also LPPD_<SECTION>__<KEY>)
  --seed N --threads N     Shortcuts for run.seed / run.threads
  --verbose | --quiet      Debug or warnings-only logging

Examples:
  python lppd.py synth --out runs/demo
  python lppd.py fit-net --features runs/demo/features.npy --gt runs/demo/gt.mld --out runs/fit
  python lppd.py infer --params runs/fit/params.lppd --features runs/demo/features.npy --out runs/pred.mld
  python lppd.py eval --pred runs/pred.mld --gt runs/demo/gt.mld --tuples runs/demo/tuples.csv --out runs/eval
"""
    print(usage)


def check_prerequisites():
    """Check if all prerequisites are met"""
    issues = []

    # Check Python version
    if sys.version_info < (3, 8):
        issues.append(f"❌ Python 3.8+ required (you have {sys.version_info.major}.{sys.version_info.minor})")

    # Check dependencies
    missing_deps = []
    required = ['numpy', 'scipy', 'loguru', 'dotenv']

    for dep in required:
        try:
            __import__(dep)
        except ImportError:
            missing_deps.append(dep)

    if missing_deps:
        issues.append(f"❌ Missing dependencies: {', '.join(missing_deps)}")
        issues.append("   Run: pip install -r requirements.txt")

    return issues


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    argv = sys.argv[1:] if argv is None else list(argv)
    configure_logging()

    if not argv:
        print_banner()
        logger.error("❌ No command specified")
        print_usage()
        return 1

    # Check prerequisites
    issues = check_prerequisites()
    if issues:
        logger.error("❌ Prerequisites check failed:")
        for issue in issues:
            print(f"  {issue}")
        return 1

    from src.cli import COMMANDS, Settings, build_parser, settings_overrides
    from src.errors import LppdError

    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            print_usage()
            return 1
        configure_logging("DEBUG" if args.verbose else "WARNING" if args.quiet else "INFO")
        if not args.quiet:
            print_banner()

        settings = Settings.resolve(args.config, settings_overrides(args))
        logger.info(f"🔄 Running {args.command} (seed {settings.seed}, threads {settings.threads})")
        return COMMANDS[args.command](args, settings)

    except KeyboardInterrupt:
        logger.info("👋 Interrupted")
        return 1

    except LppdError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code

    except Exception as e:
        logger.error(f"❌ Error: {e}")
        import traceback
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
