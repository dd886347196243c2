"""Command-line entry point: ``cpjam run`` and ``cpjam validate``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, format_settings, parse_assignments, parse_settings
from .output import OutputError, load_manifest
from .presets import PRESETS, PresetError, preset_settings, run_preset

SEED_ENV = "CPJAM_SEED"


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpjam", description=__doc__)
    p.add_argument("--version", action="version", version=f"cpjam {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset sweep and write CSV + manifest")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of: {', '.join(PRESETS)}")
    src.add_argument("--manifest", type=Path, help="re-run exactly what a previous manifest.json describes")
    run.add_argument("--config", type=Path, help="key = value config file")
    run.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    run.add_argument("--seed", type=_u64, help=f"master seed (falls back to config, then ${SEED_ENV})")
    run.add_argument("--blocks", type=_pos_int, help="OFDM blocks per sweep point")
    run.add_argument("--no-shadowing", action="store_true")
    run.add_argument("--no-jam", action="store_true")
    run.add_argument("--jam-offset-samples", type=_nonneg_int)
    run.add_argument("--sample-rate-hz", type=float)
    run.add_argument("--workers", type=_pos_int, default=1, help="worker processes (results do not depend on it)")

    val = sub.add_parser("validate", help="parse a config and print it fully resolved")
    val.add_argument("--config", type=Path, required=True)
    return p


def _overrides(args, config_has_seed: bool) -> dict:
    """CLI flags as setting overrides. The seed comes from --seed, else the
    config file, else $CPJAM_SEED."""
    o = {}
    if args.seed is not None:
        o["master_seed"] = args.seed
    elif not config_has_seed and os.environ.get(SEED_ENV):
        try:
            o["master_seed"] = _u64(os.environ[SEED_ENV])
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigError("master_seed", f"${SEED_ENV}={os.environ[SEED_ENV]!r} is not an unsigned 64-bit integer")
    if args.blocks is not None:
        o["n_blocks"] = args.blocks
    if args.no_shadowing:
        o["shadowing"] = False
    if args.no_jam:
        o["jam_enabled"] = False
    if args.jam_offset_samples is not None:
        o["jam_offset_samples"] = args.jam_offset_samples
    if args.sample_rate_hz is not None:
        o["sample_rate_hz"] = args.sample_rate_hz
    return o


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from None


def cmd_run(args) -> int:
    if args.manifest is not None:
        doc = load_manifest(args.manifest)
        name, config_text = doc["preset"], ""
        overrides = {**doc["config"], **_overrides(args, config_has_seed=True)}
    else:
        name = args.preset
        config_text = _read(args.config) if args.config else ""
        explicit, _ = parse_assignments(config_text)
        overrides = _overrides(args, config_has_seed="master_seed" in explicit)
    preset_settings(name, config_text, overrides)  # fail fast before any output
    paths = run_preset(name, overrides, args.out, config_text, workers=args.workers)
    for p in paths:
        print(p)
    return 0


def cmd_validate(args) -> int:
    sys.stdout.write(format_settings(parse_settings(_read(args.config))))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return cmd_run(args) if args.command == "run" else cmd_validate(args)
    except (ConfigError, PresetError, OutputError, ValueError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"cpjam: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
