"""
Lead/lag judgment: signed longitudinal and lateral offsets of a tracked point
relative to the target point scheduled for the same instant.

dp = PP'·U_r (positive = lead, ahead of schedule)
dq = PP'·U_n (positive = left of the target)
where PP' is tracked minus target position and U_r, U_n the target's
forward tangent and left normal at that instant.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from app.core.errors import EmptyOverlapError, InputError
from app.core.geometry import (
    Trajectory,
    TrajectoryPoint,
    Vec2,
    left_normals,
    normal_unit,
    positions_at,
    sample,
    tangent_unit,
    tangent_units,
)
from app.core.trajectory_io import write_csv

logger = logging.getLogger(__name__)

DEFAULT_EPS = 0.01
DEFAULT_DT = 0.01
OFFSET_COLUMNS = ["t", "dp", "dq", "lon_class", "lat_class"]


class LongitudinalClass(str, Enum):
    """Position along the target's direction of travel."""
    LEAD = "Lead"
    LAG = "Lag"
    ON_POINT = "OnPoint"


class LateralClass(str, Enum):
    """Position across the target's direction of travel."""
    LEFT = "Left"
    RIGHT = "Right"
    ON_LINE = "OnLine"


@dataclass(frozen=True)
class OffsetSample:
    """Offsets and their classification at one instant."""
    t: float
    dp: float
    dq: float
    longitudinal_class: LongitudinalClass
    lateral_class: LateralClass


@dataclass(frozen=True)
class OffsetSeries:
    """Offsets on a common clock, strictly increasing in t."""
    t: NDArray[np.float64]
    dp: NDArray[np.float64]
    dq: NDArray[np.float64]
    eps: float = DEFAULT_EPS
    dt: float = DEFAULT_DT

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[OffsetSample]:
        return iter(self.samples)

    @cached_property
    def samples(self) -> Tuple[OffsetSample, ...]:
        samples = []
        for t, dp, dq in zip(self.t.tolist(), self.dp.tolist(), self.dq.tolist()):
            lon, lat = classify(dp, dq, self.eps)
            samples.append(OffsetSample(t=t, dp=dp, dq=dq, longitudinal_class=lon, lateral_class=lat))
        return tuple(samples)


def _displacement(target: Trajectory, tracked_pt: TrajectoryPoint, t0: float) -> Vec2:
    """PP': tracked position minus the target position at t0."""
    return tracked_pt.position - sample(target, t0).position


def offsets(target: Trajectory, tracked_pt: TrajectoryPoint, t0: float) -> Tuple[float, float]:
    """(dp, dq) of a tracked point against the target at t0, sharing one tangent evaluation."""
    d = _displacement(target, tracked_pt, t0)
    u_r = tangent_unit(target, t0)
    u_n = normal_unit(u_r)
    return float(d @ u_r.as_array()), float(d @ u_n.as_array())


def longitudinal_offset(target: Trajectory, tracked_pt: TrajectoryPoint, t0: float) -> float:
    """Signed offset along the target tangent at t0; positive = lead, negative = lag."""
    return offsets(target, tracked_pt, t0)[0]


def lateral_offset(target: Trajectory, tracked_pt: TrajectoryPoint, t0: float) -> float:
    """Signed offset along the target's left normal at t0; positive = left, negative = right."""
    return offsets(target, tracked_pt, t0)[1]


def classify(dp: float, dq: float, eps: float = DEFAULT_EPS) -> Tuple[LongitudinalClass, LateralClass]:
    """Classify offsets; magnitudes within eps count as coincident."""
    if not eps >= 0:
        raise InputError(f"eps must be >= 0, got {eps!r}")

    if abs(dp) <= eps:
        lon = LongitudinalClass.ON_POINT
    elif dp > 0:
        lon = LongitudinalClass.LEAD
    else:
        lon = LongitudinalClass.LAG

    if abs(dq) <= eps:
        lat = LateralClass.ON_LINE
    elif dq > 0:
        lat = LateralClass.LEFT
    else:
        lat = LateralClass.RIGHT

    return lon, lat


def common_clock(first: Trajectory, second: Trajectory, dt: float) -> NDArray[np.float64]:
    """
    Shared tick times over the overlap of two trajectories.

    Ticks are t_start + k·dt on an integer counter; the overlap end is kept
    when it lies within 1e-9 s of a tick.

    Raises:
        EmptyOverlapError: the trajectories share no time
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InputError(f"dt must be a positive finite number, got {dt!r}")
    t_start = max(first.start_time, second.start_time)
    t_end = min(first.end_time, second.end_time)
    if t_end < t_start:
        raise EmptyOverlapError(
            (first.start_time, first.end_time), (second.start_time, second.end_time)
        )
    count = int(math.floor((t_end - t_start) / dt + 1e-9)) + 1
    return np.minimum(t_start + np.arange(count) * dt, t_end)


def offset_series(
    target: Trajectory,
    tracked: Trajectory,
    dt: float = DEFAULT_DT,
    eps: float = DEFAULT_EPS,
) -> OffsetSeries:
    """
    Offsets of tracked against target on their common clock.

    Raises:
        EmptyOverlapError: the trajectories share no time
    """
    if not eps >= 0:
        raise InputError(f"eps must be >= 0, got {eps!r}")

    ticks = common_clock(target, tracked, dt)
    d = positions_at(tracked, ticks) - positions_at(target, ticks)
    u_r = tangent_units(target, ticks)
    u_n = left_normals(u_r)
    dp = np.einsum("ij,ij->i", d, u_r)
    dq = np.einsum("ij,ij->i", d, u_n)

    logger.debug(f"Computed {len(ticks)} offset samples at dt={dt}")
    return OffsetSeries(t=ticks, dp=dp, dq=dq, eps=eps, dt=dt)


def leadlag_episodes(times, dp, threshold: float) -> List[Tuple[float, float]]:
    """
    Intervals where |dp| exceeds the threshold.

    Each episode is (first tick outside the band, last tick outside it).
    An episode still open at the end closes on the final tick.
    """
    times = np.asarray(times, dtype=float)
    outside = np.concatenate(([False], np.abs(np.asarray(dp, dtype=float)) > threshold, [False]))
    edges = np.diff(outside.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [(float(times[s]), float(times[e])) for s, e in zip(starts, ends)]


def export_offset_series(series: OffsetSeries, path: Path, config_hash: Optional[str] = None) -> Path:
    """Write the series as CSV `t,dp,dq,lon_class,lat_class`."""
    rows = (
        (s.t, s.dp, s.dq, s.longitudinal_class.value, s.lateral_class.value)
        for s in series.samples
    )
    return write_csv(
        path,
        OFFSET_COLUMNS,
        rows,
        config_hash,
        {"eps": series.eps, "dt": series.dt},
    )
