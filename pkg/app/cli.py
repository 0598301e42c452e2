"""
Command-line entry point: leadlag generate | simulate | analyze | report | batch | presets.

Exit codes: 0 success, 2 configuration error, 3 input-data error,
4 runtime divergence. Results are echoed to stdout as JSON; logs go to stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog

from app.core import pipeline
from app.core.config import Config
from app.core.errors import TrackingError
from app.core.run_config import RunConfig, apply_overrides, load_run_config
from app.core.scenarios import get_preset, list_presets

logger = logging.getLogger(__name__)


def setup_logging(level: Optional[int] = None) -> None:
    """stderr logging in the standard format, with structlog routed through it."""
    logging.basicConfig(
        level=level if level is not None else Config.get_log_level(),
        format=Config.LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.processors.KeyValueRenderer(key_order=["event"], sort_keys=True),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def _echo(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _out_dir(args: argparse.Namespace) -> Path:
    return Config.ensure_output_dir(Path(args.out) if args.out else None)


def _resolved_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(getattr(args, "config", None))
    return apply_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        dt=getattr(args, "dt", None),
        no_compensation=getattr(args, "no_compensation", False),
    )


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args)
    result = pipeline.generate_stage(cfg, _out_dir(args))
    _echo({**result, "config": cfg.to_dict()})
    return Config.EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args)
    _echo(pipeline.simulate_stage(cfg, Path(args.target), _out_dir(args)))
    return Config.EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _resolved_config(args)
    _echo(pipeline.analyze_stage(cfg, Path(args.target), Path(args.tracked), _out_dir(args)))
    return Config.EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    _echo(pipeline.report_stage(Path(args.analysis_dir)))
    return Config.EXIT_OK


def cmd_batch(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else Config.get_batch_workers()
    outcomes = pipeline.run_batch(
        args.configs,
        _out_dir(args),
        workers,
        seed=args.seed,
        dt=args.dt,
        no_compensation=args.no_compensation,
    )
    _echo({"scenarios": [o.to_dict() for o in outcomes]})
    failures = [o.exit_code for o in outcomes if not o.ok]
    return max(failures) if failures else Config.EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    _echo({name: get_preset(name).description for name in list_presets()})
    return Config.EXIT_OK


def _add_common(parser: argparse.ArgumentParser, simulation: bool = False) -> None:
    parser.add_argument("--config", metavar="PATH", help="run configuration (YAML or JSON)")
    parser.add_argument("--seed", type=int, metavar="N", help="random seed (overrides the config)")
    parser.add_argument("--out", metavar="DIR", help=f"output directory (default: $LEADLAG_OUTPUT_DIR or {Config.OUTPUT_DIR})")
    parser.add_argument("--dt", type=float, metavar="SECONDS", help="simulation / analysis step")
    if simulation:
        parser.add_argument("--no-compensation", action="store_true", help="disable the lead/lag acceleration compensation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leadlag",
        description="Spatiotemporal trajectory tracking: target generation, closed-loop simulation, lead/lag error analysis.",
    )
    parser.add_argument("--log-level", metavar="LEVEL", help="logging level (default: $LEADLAG_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a target trajectory from an alignment and speed profile")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="track a target trajectory in closed loop")
    p.add_argument("target", help="target trajectory CSV")
    _add_common(p, simulation=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="error analysis of a target/tracked trajectory pair")
    p.add_argument("target", help="target trajectory CSV")
    p.add_argument("tracked", help="tracked trajectory CSV")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="write report.md for an analysis directory")
    p.add_argument("analysis_dir", help="directory written by 'analyze'")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("batch", help="generate, simulate, analyze and report several configurations")
    p.add_argument("configs", nargs="+", metavar="CONFIG", help="run configuration files")
    p.add_argument("--workers", type=int, metavar="N", help="worker threads (default: $LEADLAG_BATCH_WORKERS)")
    p.add_argument("--seed", type=int, metavar="N")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--dt", type=float, metavar="SECONDS")
    p.add_argument("--no-compensation", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("presets", help="list alignment presets")
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = None
    if args.log_level:
        level = logging.getLevelName(args.log_level.upper())
        if not isinstance(level, int):
            parser.error(f"unknown log level {args.log_level}")
    setup_logging(level)

    try:
        Config.validate_config()
    except ValueError as e:
        logger.error(str(e))
        return Config.EXIT_CONFIG

    if getattr(args, "workers", None) is not None and args.workers <= 0:
        logger.error("--workers must be a positive integer")
        return Config.EXIT_CONFIG

    try:
        return args.func(args)
    except TrackingError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
