"""
Target trajectory generation.

centerline (loaded or synthesised) -> curvature-capped speed profile
(accelerate, cruise, decelerate) -> per-sample speed noise -> timestamped
trajectory.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import Config
from app.core.errors import (
    AlignmentError,
    DataFormatError,
    InfeasibleProfileError,
    InputError,
)
from app.core.geometry import Trajectory, TrajectoryPoint, angle_diff, polyline_curvatures
from app.core.run_config import AlignmentSegment, AlignmentSpec, RunConfig, SpeedProfileConfig
from app.core.scenarios import DEFAULT_PRESET, get_preset
from app.core.trajectory_io import parse_float, read_csv_rows, write_csv

logger = logging.getLogger(__name__)

SPIRAL_SUBARCS = 10
MAX_STATION_GAP = 2.0
NOISE_SPEED_FLOOR = 0.1
HEADING_CONTINUITY_TOL = 1e-6


@dataclass(frozen=True)
class CenterlinePoint:
    """Survey point: arc length from the start and planar position."""
    station: float
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class SpeedProfile:
    """Speed (m/s) at each centerline station, plus the curvature caps it was built under."""
    stations: np.ndarray
    speeds: np.ndarray
    caps: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.speeds)

    def with_speeds(self, speeds: np.ndarray) -> "SpeedProfile":
        return SpeedProfile(stations=self.stations, speeds=speeds, caps=self.caps)


# ═══════════════════════════════════════════════════════════════════════════
# CENTERLINE
# ═══════════════════════════════════════════════════════════════════════════

def load_centerline(path: Path) -> List[CenterlinePoint]:
    """
    Read a `station,x,y` centerline CSV.

    Raises:
        DataFormatError: malformed row (with line number), duplicate or
            decreasing station, fewer than two points
    """
    path = Path(path)
    points: List[CenterlinePoint] = []
    for line, row in read_csv_rows(path, Config.CENTERLINE_COLUMNS):
        station = parse_float(row, "station", path, line)
        if points:
            prev = points[-1].station
            if station == prev:
                raise DataFormatError(f"duplicate station {station!r}", str(path), line)
            if station < prev:
                raise DataFormatError(
                    f"station {station!r} is not increasing (previous {prev!r})", str(path), line
                )
            if station - prev > MAX_STATION_GAP:
                logger.warning(
                    f"{path}:{line}: station gap of {station - prev:.3f} m exceeds {MAX_STATION_GAP} m"
                )
        points.append(CenterlinePoint(station, parse_float(row, "x", path, line), parse_float(row, "y", path, line)))

    if len(points) < 2:
        raise DataFormatError(f"a centerline needs at least 2 rows, found {len(points)}", str(path))
    logger.info(f"Loaded {len(points)} centerline points from {path} ({points[-1].station - points[0].station:.3f} m)")
    return points


def write_centerline(points: Sequence[CenterlinePoint], path: Path, config_hash: Optional[str] = None) -> Path:
    rows = ((p.station, p.x, p.y) for p in points)
    return write_csv(path, Config.CENTERLINE_COLUMNS, rows, config_hash)


def _pieces(spec: AlignmentSpec) -> List[Tuple[float, float]]:
    """Constant-curvature pieces (length, signed curvature); spirals become subarcs."""
    pieces = []
    heading = spec.start_heading
    for index, seg in enumerate(spec.segments):
        if seg.start_heading is not None and abs(angle_diff(seg.start_heading, heading)) > HEADING_CONTINUITY_TOL:
            raise AlignmentError(
                f"segment {index} ({seg.kind}) starts at heading {seg.start_heading!r} "
                f"but the alignment arrives at {heading!r}; tangents must be continuous"
            )
        for length, kappa in _segment_pieces(seg):
            pieces.append((length, kappa))
            heading += kappa * length
    return pieces


def _segment_pieces(seg: AlignmentSegment) -> List[Tuple[float, float]]:
    if seg.kind == "straight":
        return [(seg.length, 0.0)]
    if seg.kind == "arc":
        return [(seg.length, seg.curvature)]
    sub = seg.length / SPIRAL_SUBARCS
    pieces = []
    for i in range(SPIRAL_SUBARCS):
        fraction = (i + 0.5) / SPIRAL_SUBARCS
        if not seg.entering:
            fraction = 1.0 - fraction
        pieces.append((sub, seg.curvature * fraction))
    return pieces


def _advance(x: float, y: float, theta: float, kappa: float, u: float) -> Tuple[float, float, float]:
    """Pose after travelling u metres along constant curvature kappa."""
    if kappa == 0.0:
        return x + u * math.cos(theta), y + u * math.sin(theta), theta
    theta_end = theta + kappa * u
    return (
        x + (math.sin(theta_end) - math.sin(theta)) / kappa,
        y - (math.cos(theta_end) - math.cos(theta)) / kappa,
        theta_end,
    )


def synth_alignment(spec: AlignmentSpec, spacing: float = 1.0) -> List[CenterlinePoint]:
    """
    Sample an alignment into a centerline.

    Stations run 0, spacing, 2·spacing, ... and the total length is always the
    last station; a final step shorter than half a spacing is merged into it.
    Arcs are exact; spirals use piecewise-constant curvature subarcs.

    Raises:
        AlignmentError: discontinuous tangents between segments
    """
    if not (math.isfinite(spacing) and spacing > 0):
        raise InputError(f"spacing must be > 0, got {spacing!r}")

    pieces = _pieces(spec)
    starts = []
    poses = []
    x, y, theta = spec.start_x, spec.start_y, spec.start_heading
    s = 0.0
    for length, kappa in pieces:
        starts.append(s)
        poses.append((x, y, theta))
        x, y, theta = _advance(x, y, theta, kappa, length)
        s += length
    total = s

    stations = []
    k = 0
    while k * spacing < total - 0.5 * spacing:
        stations.append(k * spacing)
        k += 1
    stations.append(total)

    points = []
    for station in stations:
        i = max(int(np.searchsorted(starts, station, side="right")) - 1, 0)
        px, py, ptheta = poses[i]
        qx, qy, _ = _advance(px, py, ptheta, pieces[i][1], station - starts[i])
        points.append(CenterlinePoint(station, qx, qy))

    logger.info(f"Synthesised {len(points)} centerline points over {total:.3f} m from {len(spec.segments)} segments")
    return points


def resolve_centerline(cfg: RunConfig) -> List[CenterlinePoint]:
    """Centerline for a run: preset, CSV file or inline segments."""
    alignment = cfg.alignment
    if alignment.centerline_path is not None:
        return load_centerline(Path(alignment.centerline_path))
    spec = alignment.to_spec()
    if spec is None:
        spec = get_preset(alignment.preset or DEFAULT_PRESET).alignment
    return synth_alignment(spec, alignment.spacing)


# ═══════════════════════════════════════════════════════════════════════════
# SPEED PROFILE
# ═══════════════════════════════════════════════════════════════════════════

def curvature_caps(centerline: Sequence[CenterlinePoint], cfg: SpeedProfileConfig) -> np.ndarray:
    """Per-station cap min(v_desired, sqrt(a_lat_max / |kappa|))."""
    kappa = np.abs(polyline_curvatures([p.x for p in centerline], [p.y for p in centerline]))
    caps = np.full(len(centerline), cfg.v_desired, dtype=float)
    curved = kappa > 0.0
    caps[curved] = np.minimum(cfg.v_desired, np.sqrt(cfg.a_lat_max / kappa[curved]))
    return caps


def build_speed_profile(centerline: Sequence[CenterlinePoint], cfg: SpeedProfileConfig) -> SpeedProfile:
    """
    Forward/backward pass speed profile.

    The forward pass starts at v_start and limits v² growth to
    2·a_accel·ds; the backward pass ends at v_end and limits v² growth
    (looking backwards) to 2·a_decel·ds. Every value stays under its cap.

    Raises:
        InfeasibleProfileError: v_start is above the first cap or cannot be
            brought down in time by a_decel
    """
    if len(centerline) < 2:
        raise InputError("a centerline needs at least 2 points")
    stations = np.array([p.station for p in centerline], dtype=float)
    ds = np.diff(stations)
    caps = curvature_caps(centerline, cfg)

    if cfg.v_start > caps[0]:
        raise InfeasibleProfileError(
            f"v_start={cfg.v_start} exceeds the speed cap {caps[0]:.3f} m/s at the first station"
        )

    v = caps.copy()
    v[0] = cfg.v_start
    for i in range(len(v) - 1):
        v[i + 1] = min(v[i + 1], math.sqrt(v[i] * v[i] + 2.0 * cfg.a_accel * ds[i]))

    if v[-1] < cfg.v_end:
        logger.warning(f"v_end={cfg.v_end} is not reachable; the profile ends at {v[-1]:.3f} m/s")
    v[-1] = min(v[-1], cfg.v_end)
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] * v[i + 1] + 2.0 * cfg.a_decel * ds[i]))

    if v[0] < cfg.v_start:
        raise InfeasibleProfileError(
            f"v_start={cfg.v_start} m/s cannot be reduced to the downstream limits with "
            f"a_decel={cfg.a_decel} m/s² (at most {v[0]:.3f} m/s is feasible)"
        )

    logger.info(f"Speed profile: peak {v.max():.3f} m/s over {stations[-1] - stations[0]:.3f} m")
    return SpeedProfile(stations=stations, speeds=v, caps=caps)


def apply_speed_noise(profile: SpeedProfile, cfg: SpeedProfileConfig) -> SpeedProfile:
    """
    Multiply each speed by (1 + u), u ~ U[-noise_fraction, +noise_fraction].

    Deterministic per seed. Exact zeros stay zero; every other sample is
    floored at 0.1 m/s.
    """
    if cfg.noise_fraction == 0.0:
        return profile
    seed = cfg.seed if cfg.seed is not None else Config.get_default_seed()
    rng = np.random.default_rng(seed)
    u = rng.uniform(-cfg.noise_fraction, cfg.noise_fraction, size=len(profile.speeds))
    noisy = profile.speeds * (1.0 + u)
    noisy = np.where(profile.speeds == 0.0, 0.0, np.maximum(noisy, NOISE_SPEED_FLOOR))
    return profile.with_speeds(noisy)


# ═══════════════════════════════════════════════════════════════════════════
# TRAJECTORY
# ═══════════════════════════════════════════════════════════════════════════

def _centerline_headings(centerline: Sequence[CenterlinePoint]) -> List[float]:
    n = len(centerline)
    headings = []
    for i in range(n):
        a = centerline[max(i - 1, 0)]
        b = centerline[min(i + 1, n - 1)]
        headings.append(math.atan2(b.y - a.y, b.x - a.x))
    return headings


def to_trajectory(centerline: Sequence[CenterlinePoint], profile: SpeedProfile) -> Trajectory:
    """
    Timestamp a centerline with a speed profile.

    Each interval takes ds / v_mid seconds with v_mid the mean of its end
    speeds, which is exact for a constant-acceleration ramp from or to rest.
    Times are accumulated with compensated summation.

    Raises:
        InputError: length mismatch, or a zero speed away from the endpoints
    """
    n = len(centerline)
    speeds = [float(v) for v in profile.speeds]
    if len(speeds) != n:
        raise InputError(f"profile has {len(speeds)} speeds for {n} centerline points")
    for i in range(1, n - 1):
        if not speeds[i] > 0.0:
            raise InputError(f"speed at station {centerline[i].station!r} is {speeds[i]!r}; only endpoints may be zero")
    for i, v in enumerate(speeds):
        if v < 0.0 or not math.isfinite(v):
            raise InputError(f"invalid speed {v!r} at station {centerline[i].station!r}")

    headings = _centerline_headings(centerline)
    times = [0.0]
    total, comp = 0.0, 0.0
    for i in range(n - 1):
        v_mid = 0.5 * (speeds[i] + speeds[i + 1])
        if not v_mid > 0.0:
            raise InputError(f"interval starting at station {centerline[i].station!r} has zero speed")
        dt = (centerline[i + 1].station - centerline[i].station) / v_mid
        y = total + dt
        if abs(total) >= abs(dt):
            comp += (total - y) + dt
        else:
            comp += (dt - y) + total
        total = y
        times.append(total + comp)

    points = [
        TrajectoryPoint(t=times[i], x=p.x, y=p.y, v=speeds[i], heading=headings[i])
        for i, p in enumerate(centerline)
    ]
    return Trajectory.from_points(points)


def generate_target(cfg: RunConfig) -> Tuple[List[CenterlinePoint], SpeedProfile, Trajectory]:
    """Full pipeline for a run configuration."""
    centerline = resolve_centerline(cfg)
    profile = build_speed_profile(centerline, cfg.speed_profile)
    noisy = apply_speed_noise(profile, cfg.speed_profile)
    trajectory = to_trajectory(centerline, noisy)
    logger.info(
        f"Generated target: {len(trajectory)} points, {trajectory.duration:.3f} s, "
        f"noise {cfg.speed_profile.noise_fraction:.3%} (seed {cfg.speed_profile.seed})"
    )
    return centerline, noisy, trajectory
