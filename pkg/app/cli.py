"""
Command-line front end: calibrate, analyze, describe, compare.

Usage:
    python -m app.cli calibrate --duration 200
    python -m app.cli analyze sound.wav --out output
    python -m app.cli describe sounds/ --weighting both
    python -m app.cli compare output/descriptors.csv perceptual.csv
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.config import load_run_config
from app.core.errors import EXIT_CONFIG, EXIT_DATA, EXIT_OK, TextureError
from app.core.texture_defaults import TOOL_NAME, TOOL_VERSION
from app.repositories import export_repo
from app.schemas.texture import OffsetMode, WeightingChoice
from app.services.texture_engine import TextureEngine, get_texture_engine

logger = logging.getLogger(__name__)

# argparse dest -> configuration key
FLAG_KEYS = {
    "profile": "PROFILE",
    "out": "OUT_DIR",
    "seed": "SEED",
    "theta": "THETA",
    "c_p": "C_P",
    "c_t": "C_T",
    "gate_threshold": "GATE_THRESHOLD",
    "gate_slope": "GATE_SLOPE",
    "weighting": "WEIGHTING",
    "offset_mode": "OFFSET_MODE",
    "workers": "WORKERS",
    "log_level": "LOG_LEVEL",
    "add_floor": "ADD_FLOOR",
}


def _common_flags() -> argparse.ArgumentParser:
    """Flags accepted both before and after the subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS
    common.add_argument("--config", default=d, help="dotenv-style KEY=value config file")
    common.add_argument("--profile", default=d, help="Calibration profile path")
    common.add_argument("--out", default=d, help="Output directory")
    common.add_argument("--seed", type=int, default=d, help="Noise seed (the floor uses seed + 1)")
    common.add_argument("--theta", type=float, default=d, help="Correlation threshold (default 0.2)")
    common.add_argument("--c-p", dest="c_p", type=float, default=d, help="Pattern-direction scale (default 0.7)")
    common.add_argument("--c-t", dest="c_t", type=float, default=d, help="Tract-direction scale (default 2.0)")
    common.add_argument("--gate-threshold", dest="gate_threshold", type=float, default=d,
                        help="Gate threshold in dB (default 8)")
    common.add_argument("--gate-slope", dest="gate_slope", type=float, default=d,
                        help="Gate slope per dB (default 2.5)")
    common.add_argument("--weighting", choices=[w.value for w in WeightingChoice], default=d,
                        help="Descriptor weighting")
    common.add_argument("--offset-mode", dest="offset_mode", choices=[m.value for m in OffsetMode], default=d,
                        help="Fractional distance handling in center-surround ratios")
    common.add_argument("--workers", type=int, default=d, help="Parallel files / FFT threads")
    common.add_argument("--no-floor", dest="add_floor", action="store_false", default=d,
                        help="Do not add the white-noise floor before analysis")
    common.add_argument("--log-level", dest="log_level", default=d, help="DEBUG, INFO, WARNING, ERROR")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Tonal / pulsal / noisy texture analysis of sounds on a calibrated gammachirp cochleagram",
        parents=[common],
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    tasks = parser.add_subparsers(title="subcommands", dest="command", metavar="")
    tasks.required = True

    calibrate = tasks.add_parser("calibrate", parents=[common], help="Estimate correlation distances from white noise")
    calibrate.add_argument("--duration", type=float, default=None, help="Noise duration in seconds (default 200)")
    calibrate.add_argument("--save-noise", dest="save_noise", default=None, help="Also write the noise as WAV")

    analyze = tasks.add_parser("analyze", parents=[common], help="Maps, histograms and prevalence for one WAV")
    analyze.add_argument("wav", help="16-bit PCM WAV at 44.1 kHz")

    describe = tasks.add_parser("describe", parents=[common], help="Pulsality/tonality/noisiness table")
    describe.add_argument("target", help="WAV file or directory of WAV files")
    describe.add_argument("--output", default=None, help="CSV path (default <out>/descriptors.csv)")

    compare = tasks.add_parser("compare", parents=[common], help="Correlate descriptors with perceptual MDS data")
    compare.add_argument("descriptors", help="Descriptor CSV from `describe`")
    compare.add_argument("perceptual", help="CSV with sound_id,category,mds1,mds2,mds3")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    values = vars(args)
    return {key: values[dest] for dest, key in FLAG_KEYS.items() if dest in values}


def cmd_calibrate(engine: TextureEngine, args: argparse.Namespace) -> int:
    profile, reference = engine.calibrate(duration_s=args.duration, save_noise=args.save_noise)
    print(f"profile {profile.profile_id}: {profile.n_channels} channels, "
          f"{len(reference.histograms)} reference histograms -> {engine.profiles.profile_path}")
    return EXIT_OK


def cmd_analyze(engine: TextureEngine, args: argparse.Namespace) -> int:
    out_dir = Path(engine.config.out_dir)
    summary = engine.analyze(args.wav, out_dir)
    target = out_dir / Path(args.wav).stem / "summary.json"
    export_repo.write_json(export_repo.clean_json(summary), target, export_repo.provenance(engine.config))
    print(f"analysis written to {target.parent}")
    return EXIT_OK


def cmd_describe(engine: TextureEngine, args: argparse.Namespace) -> int:
    output = args.output or str(Path(engine.config.out_dir) / "descriptors.csv")
    table = engine.describe(args.target, output)
    if table.empty:
        logger.error(f"No WAV files found in {args.target}")
        return EXIT_DATA
    failed = table["warnings"].astype(str).str.startswith("error:")
    print(f"{len(table)} row(s), {int(failed.sum())} failed -> {output}")
    return EXIT_DATA if failed.all() else EXIT_OK


def cmd_compare(engine: TextureEngine, args: argparse.Namespace) -> int:
    out_dir = Path(engine.config.out_dir)
    grid, _ = engine.compare(args.descriptors, args.perceptual, out_dir)
    print(f"{len(grid)} correlations -> {out_dir / 'correlations.csv'}")
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "analyze": cmd_analyze,
    "describe": cmd_describe,
    "compare": cmd_compare,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        config = load_run_config(getattr(args, "config", None), _overrides(args))
        logging.getLogger().setLevel(config.log_level)
        engine = get_texture_engine(config)
        return COMMANDS[args.command](engine, args)
    except ValidationError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_CONFIG
    except TextureError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
