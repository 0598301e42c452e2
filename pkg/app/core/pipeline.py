"""
generate -> simulate -> analyze -> report stages over files, shared by the
CLI subcommands and batch runs.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.core.error_analysis import analyze
from app.core.errors import DivergenceError, TrackingError
from app.core.report import write_report
from app.core.run_config import RunConfig, apply_overrides, config_hash, load_run_config
from app.core.simulation import run_closed_loop, write_divergence_dump, write_simulation_outputs
from app.core.target_generator import generate_target, write_centerline
from app.core.trajectory_io import read_trajectory, write_json, write_trajectory

logger = logging.getLogger(__name__)

TARGET_FILE = "target.csv"
CENTERLINE_FILE = "centerline.csv"
RESOLVED_CONFIG_FILE = "config.resolved.json"
ANALYSIS_DIR = "analysis"


def write_resolved_config(cfg: RunConfig, out_dir: Path) -> Path:
    return write_json(Path(out_dir) / RESOLVED_CONFIG_FILE, {"config_hash": config_hash(cfg), "config": cfg.to_dict()})


def generate_stage(cfg: RunConfig, out_dir: Path) -> Dict[str, Any]:
    """Build the target trajectory and write target.csv and centerline.csv."""
    out_dir = Path(out_dir)
    digest = config_hash(cfg)
    centerline, _, target = generate_target(cfg)
    target_path = write_trajectory(target, out_dir / TARGET_FILE, digest, {"kind": "target", "seed": cfg.speed_profile.seed})
    write_centerline(centerline, out_dir / CENTERLINE_FILE, digest)
    write_resolved_config(cfg, out_dir)
    return {
        "target": str(target_path),
        "points": len(target),
        "duration_s": target.duration,
        "final_station_m": centerline[-1].station,
        "seed": cfg.speed_profile.seed,
        "config_hash": digest,
    }


def simulate_stage(cfg: RunConfig, target_path: Path, out_dir: Path) -> Dict[str, Any]:
    """
    Run the closed loop against a target file and write tracked.csv and run_log.json.

    On divergence the dump is written to divergence_dump.json before re-raising.
    """
    out_dir = Path(out_dir)
    target = read_trajectory(Path(target_path))
    try:
        result = run_closed_loop(target, cfg)
    except DivergenceError as e:
        dump_path = write_divergence_dump(e, out_dir)
        logger.error(f"Simulation diverged; diagnostic dump written to {dump_path}")
        raise
    paths = write_simulation_outputs(result, cfg, out_dir, str(target_path))
    return {
        "tracked": str(paths["tracked"]),
        "run_log": str(paths["run_log"]),
        "ticks": result.ticks,
        "max_abs_dp": result.max_abs_dp,
        "max_abs_dq": result.max_abs_dq,
        "config_hash": config_hash(cfg),
    }


def analyze_stage(cfg: RunConfig, target_path: Path, tracked_path: Path, out_dir: Path) -> Dict[str, Any]:
    """Error analysis of two trajectory files into out_dir."""
    target = read_trajectory(Path(target_path))
    tracked = read_trajectory(Path(tracked_path))
    _, summary, paths = analyze(
        target,
        tracked,
        Path(out_dir),
        dt=cfg.analysis_dt,
        eps=cfg.analysis_eps,
        bands=cfg.analysis.bands,
        threshold=cfg.compensation.threshold_m,
        config_hash=config_hash(cfg),
    )
    return {
        "out_dir": str(out_dir),
        "samples": summary.samples,
        "max_abs": {name: s.max_abs for name, s in summary.channels.items()},
        "leadlag_episodes": summary.leadlag_episodes.count,
        "files": sorted(p.name for p in paths.values()),
    }


def report_stage(analysis_dir: Path) -> Dict[str, Any]:
    return {"report": str(write_report(Path(analysis_dir)))}


@dataclass
class BatchOutcome:
    """Result of one scenario in a batch."""
    name: str
    out_dir: str
    ok: bool
    exit_code: int = 0
    error: Optional[str] = None
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "out_dir": self.out_dir,
            "ok": self.ok,
            "exit_code": self.exit_code,
            "error": self.error,
            "summary": self.summary,
        }


def run_scenario(
    config_path: Optional[str],
    out_dir: Path,
    seed: Optional[int] = None,
    dt: Optional[float] = None,
    no_compensation: bool = False,
) -> BatchOutcome:
    """generate -> simulate -> analyze -> report for one config, never raising TrackingError."""
    name = Path(config_path).stem if config_path else "defaults"
    out_dir = Path(out_dir)
    try:
        cfg = apply_overrides(load_run_config(config_path), seed=seed, dt=dt, no_compensation=no_compensation)
        generated = generate_stage(cfg, out_dir)
        simulated = simulate_stage(cfg, Path(generated["target"]), out_dir)
        analysis_dir = out_dir / ANALYSIS_DIR
        analyzed = analyze_stage(cfg, Path(generated["target"]), Path(simulated["tracked"]), analysis_dir)
        report_stage(analysis_dir)
    except TrackingError as e:
        logger.error(f"Scenario {name} failed: {e}")
        return BatchOutcome(name=name, out_dir=str(out_dir), ok=False, exit_code=e.exit_code, error=str(e))

    return BatchOutcome(
        name=name,
        out_dir=str(out_dir),
        ok=True,
        summary={
            "ticks": simulated["ticks"],
            "max_abs_dp": simulated["max_abs_dp"],
            "max_abs": analyzed["max_abs"],
            "config_hash": simulated["config_hash"],
        },
    )


def run_batch(
    config_paths: List[str],
    out_root: Path,
    workers: int,
    seed: Optional[int] = None,
    dt: Optional[float] = None,
    no_compensation: bool = False,
) -> List[BatchOutcome]:
    """
    Run independent scenarios in a thread pool, one sub-directory each.

    Outcomes come back in the order of config_paths.
    """
    out_root = Path(out_root)
    names = [Path(p).stem for p in config_paths]
    if len(set(names)) != len(names):
        dirs = [out_root / f"{i:02d}_{n}" for i, n in enumerate(names)]
    else:
        dirs = [out_root / n for n in names]

    logger.info(f"Running {len(config_paths)} scenarios with {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(run_scenario, path, out_dir, seed, dt, no_compensation)
            for path, out_dir in zip(config_paths, dirs)
        ]
        outcomes = [f.result() for f in futures]

    failed = [o.name for o in outcomes if not o.ok]
    if failed:
        logger.warning(f"{len(failed)} scenario(s) failed: {', '.join(failed)}")
    return outcomes
