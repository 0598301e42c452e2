"""
Closed-loop tracking simulation.

The vehicle starts on the first target point with the target's heading and
speed, then control_tick and the plant step alternate on an integer tick
counter until the target's end time.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Deque, Dict, List, Optional

import structlog

from app.core.config import Config
from app.core.controllers import ControllerState, control_tick
from app.core.errors import DivergenceError, InputDataError, InputError
from app.core.geometry import Trajectory, TrajectoryPoint, tangent_unit
from app.core.run_config import RunConfig, config_hash
from app.core.trajectory_io import write_json, write_trajectory
from app.core.vehicle_model import ControlInput, VehicleState, saturate_input, step

logger = structlog.get_logger()

DUMP_TICKS = 50
RUN_LOG_FILE = "run_log.json"
DIVERGENCE_DUMP_FILE = "divergence_dump.json"
TRACKED_FILE = "tracked.csv"


@dataclass
class SimulationResult:
    """Tracked trajectory and run statistics."""
    tracked: Trajectory
    ticks: int
    max_abs_dp: float
    max_abs_dq: float
    final_dp: float
    compensation_ticks: int
    lqr_buckets: List[int] = field(default_factory=list)


def _initial_state(target: Trajectory) -> VehicleState:
    first = target[0]
    heading = first.heading
    if heading is None:
        heading = tangent_unit(target, first.t).angle
    return VehicleState(x=first.x, y=first.y, heading=heading, v=first.v)


def _tick_record(t: float, state: VehicleState, command: Optional[ControlInput], ctrl: ControllerState) -> Dict[str, Any]:
    record = {"t": t, "x": state.x, "y": state.y, "heading": state.heading, "v": state.v}
    if command is not None:
        record.update(accel=command.accel, steer=command.steer)
    if ctrl.last is not None:
        record.update(
            dp=ctrl.last.dp,
            dq=ctrl.last.dq,
            theta_e=ctrl.last.theta_e,
            accel_comp=ctrl.last.accel_comp,
        )
    return record


def tick_count(target: Trajectory, dt: float, max_duration_s: Optional[float] = None) -> int:
    """Number of dt steps that fit inside the target (and the optional duration cap)."""
    n = int(math.floor(target.duration / dt + 1e-9))
    if max_duration_s is not None:
        n = min(n, int(math.floor(max_duration_s / dt + 1e-9)))
    return n


def run_closed_loop(target: Trajectory, cfg: RunConfig) -> SimulationResult:
    """
    Simulate the vehicle tracking a target trajectory.

    Raises:
        DivergenceError: |dq| exceeded the divergence limit or a command
            stopped being finite; the error carries the last ticks
        DareConvergenceError: the LQR gains could not be solved
    """
    sim = cfg.simulation
    dt = sim.dt
    t0 = target.start_time
    n_ticks = tick_count(target, dt, sim.max_duration_s)
    if n_ticks == 0:
        raise InputError(f"target lasts {target.duration!r} s, shorter than one step of {dt} s")
    digest = config_hash(cfg)

    state = _initial_state(target)
    ctrl = ControllerState.create(cfg)
    points = [TrajectoryPoint(t=t0, x=state.x, y=state.y, v=state.v, heading=state.heading)]
    history: Deque[Dict[str, Any]] = deque(maxlen=DUMP_TICKS)
    prev_steer: Optional[float] = None
    max_dp = max_dq = 0.0
    comp_ticks = 0

    logger.info(
        "Starting closed-loop simulation",
        ticks=n_ticks,
        dt=dt,
        compensation_enabled=cfg.compensation.enabled,
        config_hash=digest,
    )

    for k in range(n_ticks):
        t = t0 + k * dt
        try:
            command = control_tick(target, state, t, cfg, ctrl)
        except InputDataError as e:
            history.append(_tick_record(t, state, None, ctrl))
            raise DivergenceError(
                f"control tick failed at t={t:.3f} s: {e}",
                _dump("invalid command", t, history, digest),
            ) from e

        history.append(_tick_record(t, state, command, ctrl))
        diag = ctrl.last
        max_dp = max(max_dp, abs(diag.dp))
        max_dq = max(max_dq, abs(diag.dq))
        if diag.accel_comp != 0.0:
            comp_ticks += 1

        if abs(diag.dq) > sim.divergence_limit_m:
            logger.error("Simulation diverged", t=t, dq=diag.dq, limit=sim.divergence_limit_m)
            raise DivergenceError(
                f"lateral offset {diag.dq:.3f} m exceeded {sim.divergence_limit_m} m at t={t:.3f} s",
                _dump("lateral divergence", t, history, digest),
            )

        applied = saturate_input(command, cfg.vehicle, dt, prev_steer)
        state = step(state, command, cfg.vehicle, dt, prev_steer)
        prev_steer = applied.steer
        t_next = min(t0 + (k + 1) * dt, target.end_time)
        points.append(TrajectoryPoint(t=t_next, x=state.x, y=state.y, v=state.v, heading=state.heading))

    final_dp = ctrl.last.dp if ctrl.last is not None else 0.0
    result = SimulationResult(
        tracked=Trajectory.from_points(points),
        ticks=n_ticks,
        max_abs_dp=max_dp,
        max_abs_dq=max_dq,
        final_dp=final_dp,
        compensation_ticks=comp_ticks,
        lqr_buckets=ctrl.scheduler.cached_buckets,
    )
    logger.info(
        "Simulation completed",
        ticks=n_ticks,
        max_abs_dp=round(max_dp, 6),
        max_abs_dq=round(max_dq, 6),
        compensation_ticks=comp_ticks,
    )
    return result


def _dump(reason: str, t: float, history: Deque[Dict[str, Any]], digest: str) -> Dict[str, Any]:
    return {
        "reason": reason,
        "t": t,
        "config_hash": digest,
        "ticks": list(history),
    }


def build_run_log(cfg: RunConfig, result: SimulationResult, target_path: Optional[str] = None) -> Dict[str, Any]:
    """Run record embedding the full resolved config."""
    return {
        "format_version": Config.FORMAT_VERSION,
        "config_hash": config_hash(cfg),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "target": Path(target_path).name if target_path is not None else None,
        "compensation": cfg.compensation.model_dump(),
        "vehicle": cfg.vehicle.model_dump(),
        "ticks": result.ticks,
        "max_abs_dp": result.max_abs_dp,
        "max_abs_dq": result.max_abs_dq,
        "final_dp": result.final_dp,
        "compensation_ticks": result.compensation_ticks,
        "lqr_speed_buckets": [b * cfg.lqr.speed_bucket for b in result.lqr_buckets],
    }


def write_simulation_outputs(
    result: SimulationResult,
    cfg: RunConfig,
    out_dir: Path,
    target_path: Optional[str] = None,
) -> Dict[str, Path]:
    """Write tracked.csv (with manifest) and run_log.json into out_dir."""
    out_dir = Path(out_dir)
    digest = config_hash(cfg)
    tracked_path = write_trajectory(result.tracked, out_dir / TRACKED_FILE, digest, {"kind": "tracked"})
    log_path = write_json(out_dir / RUN_LOG_FILE, build_run_log(cfg, result, target_path))
    logger.info("Wrote simulation outputs", tracked=str(tracked_path), run_log=str(log_path))
    return {"tracked": tracked_path, "run_log": log_path}


def write_divergence_dump(error: DivergenceError, out_dir: Path) -> Path:
    return write_json(Path(out_dir) / DIVERGENCE_DUMP_FILE, error.dump)
