"""
Trajectory geometry: timestamped samples, interpolation, tangent/normal
frames and curvature.

A Trajectory keeps its samples as TrajectoryPoint objects and as numpy
columns (t, x, y, v, heading); the vectorized helpers work on the columns
and the per-point functions are thin wrappers over them.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from app.core.errors import (
    DegenerateTangentError,
    DuplicatePointError,
    InputError,
    OutOfRangeError,
)

logger = logging.getLogger(__name__)

# Below this speed the finite-difference tangent is not trusted.
TANGENT_SPEED_FLOOR = 0.01
# Requests this close outside the domain are clamped onto it.
TIME_TOLERANCE = 1e-9
UNIT_NORM_TOLERANCE = 1e-12

# Planar vector (metres) as a length-2 float array.
Vec2 = NDArray[np.float64]


def wrap_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]. Values already in range are returned untouched."""
    if -math.pi < angle <= math.pi:
        return angle
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def wrap_angles(angles: NDArray[np.float64]) -> NDArray[np.float64]:
    """Element-wise wrap_angle."""
    angles = np.asarray(angles, dtype=float)
    wrapped = np.fmod(angles + np.pi, 2.0 * np.pi)
    wrapped = np.where(wrapped <= 0.0, wrapped + 2.0 * np.pi, wrapped) - np.pi
    return np.where((angles > -np.pi) & (angles <= np.pi), angles, wrapped)


def angle_diff(a: float, b: float) -> float:
    """Minimal signed angle a - b, in (-pi, pi]."""
    return wrap_angle(a - b)


def _require_finite(name: str, *values: float) -> None:
    for value in values:
        if not math.isfinite(value):
            raise InputError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class UnitVec2:
    """Unit direction vector."""
    ux: float
    uy: float

    def __post_init__(self):
        _require_finite("UnitVec2 component", self.ux, self.uy)
        if abs(self.ux * self.ux + self.uy * self.uy - 1.0) > UNIT_NORM_TOLERANCE:
            raise InputError(f"({self.ux!r}, {self.uy!r}) is not a unit vector")

    @classmethod
    def from_components(cls, x: float, y: float) -> "UnitVec2":
        n = float(np.hypot(x, y))
        if n == 0.0 or not math.isfinite(n):
            raise DegenerateTangentError(f"cannot normalise vector ({x!r}, {y!r})")
        return cls(float(x) / n, float(y) / n)

    @classmethod
    def from_angle(cls, theta: float) -> "UnitVec2":
        return cls(math.cos(theta), math.sin(theta))

    @property
    def angle(self) -> float:
        return math.atan2(self.uy, self.ux)

    def as_array(self) -> Vec2:
        return np.array([self.ux, self.uy])


@dataclass(frozen=True)
class TrajectoryPoint:
    """
    One timestamped pose and speed sample.

    heading is wrapped into (-pi, pi] on construction. It may be None for
    recordings that carry no heading channel.
    """
    t: float
    x: float
    y: float
    v: float
    heading: Optional[float] = None

    def __post_init__(self):
        _require_finite("TrajectoryPoint field", self.t, self.x, self.y, self.v)
        if self.v < 0.0:
            raise InputError(f"speed must be >= 0, got {self.v!r} at t={self.t!r}")
        if self.heading is not None:
            _require_finite("TrajectoryPoint heading", self.heading)
            object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> Vec2:
        return np.array([self.x, self.y])


def _column(values: Iterable[float]) -> NDArray[np.float64]:
    array = np.fromiter(values, dtype=float)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples with strictly increasing time; at least two points."""
    points: Tuple[TrajectoryPoint, ...]
    t: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    x: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    y: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    v: NDArray[np.float64] = field(init=False, repr=False, compare=False)
    heading: NDArray[np.float64] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        points = tuple(self.points)
        if len(points) < 2:
            raise InputError(f"a trajectory needs at least 2 points, got {len(points)}")
        t = _column(p.t for p in points)
        steps = np.diff(t)
        if not np.all(steps > 0):
            i = int(np.argmin(steps > 0))
            raise InputError(f"trajectory time must be strictly increasing: {float(t[i])!r} then {float(t[i + 1])!r}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", _column(p.x for p in points))
        object.__setattr__(self, "y", _column(p.y for p in points))
        object.__setattr__(self, "v", _column(p.v for p in points))
        object.__setattr__(self, "heading", _column(math.nan if p.heading is None else p.heading for p in points))

    @classmethod
    def from_points(cls, points: Iterable[TrajectoryPoint]) -> "Trajectory":
        return cls(tuple(points))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[TrajectoryPoint]:
        return iter(self.points)

    def __getitem__(self, index: int) -> TrajectoryPoint:
        return self.points[index]

    @property
    def start_time(self) -> float:
        return float(self.t[0])

    @property
    def end_time(self) -> float:
        return float(self.t[-1])

    @property
    def duration(self) -> float:
        return self.end_time - self.start_time

    @cached_property
    def has_heading(self) -> bool:
        return bool(np.all(np.isfinite(self.heading)))

    @cached_property
    def velocities(self) -> NDArray[np.float64]:
        """(n, 2) finite-difference velocities: central inside, one-sided at the ends."""
        n = len(self.t)
        idx = np.arange(n)
        lo = np.maximum(idx - 1, 0)
        hi = np.minimum(idx + 1, n - 1)
        dt = self.t[hi] - self.t[lo]
        return np.column_stack(((self.x[hi] - self.x[lo]) / dt, (self.y[hi] - self.y[lo]) / dt))

    @cached_property
    def curvatures(self) -> NDArray[np.float64]:
        """
        Signed per-sample curvature (1/m), endpoints copied from their neighbours.

        Samples whose neighbours coincide (the trajectory pauses) take the value
        interpolated from the nearest well-defined samples.
        """
        return polyline_curvatures(self.x, self.y, strict=False)

    def clamp_times(self, ts) -> NDArray[np.float64]:
        """
        Validate query times and clamp those within TIME_TOLERANCE onto the domain.

        Raises:
            InputError: a time is not finite
            OutOfRangeError: a time lies outside [start_time, end_time]
        """
        ts = np.asarray(ts, dtype=float)
        if not np.all(np.isfinite(ts)):
            raise InputError(f"time must be finite, got {float(ts[~np.isfinite(ts)].ravel()[0])!r}")
        start, end = self.start_time, self.end_time
        outside = (ts < start - TIME_TOLERANCE) | (ts > end + TIME_TOLERANCE)
        if np.any(outside):
            raise OutOfRangeError(float(ts[outside].ravel()[0]), start, end)
        return np.clip(ts, start, end)


def positions_at(traj: Trajectory, ts) -> NDArray[np.float64]:
    """(n, 2) positions interpolated linearly at the times ts."""
    ts = traj.clamp_times(ts)
    return np.column_stack((np.interp(ts, traj.t, traj.x), np.interp(ts, traj.t, traj.y)))


def speeds_at(traj: Trajectory, ts) -> NDArray[np.float64]:
    return np.interp(traj.clamp_times(ts), traj.t, traj.v)


def sample(traj: Trajectory, t: float) -> TrajectoryPoint:
    """
    Linear interpolation of a trajectory at time t.

    Position and speed are interpolated linearly, heading along the shortest
    arc. A request at a stored timestamp returns the stored point itself.

    Raises:
        OutOfRangeError: if t lies outside [start_time, end_time]
    """
    t = float(traj.clamp_times(t))
    i = int(np.searchsorted(traj.t, t))
    if traj.t[i] == t:
        return traj.points[i]

    heading = None
    p0, p1 = traj.points[i - 1], traj.points[i]
    if p0.heading is not None and p1.heading is not None:
        w = (t - p0.t) / (p1.t - p0.t)
        heading = wrap_angle(p0.heading + w * angle_diff(p1.heading, p0.heading))

    return TrajectoryPoint(
        t=t,
        x=float(np.interp(t, traj.t, traj.x)),
        y=float(np.interp(t, traj.t, traj.y)),
        v=float(np.interp(t, traj.t, traj.v)),
        heading=heading,
    )


def _velocities_at(traj: Trajectory, ts: NDArray[np.float64]) -> NDArray[np.float64]:
    vel = traj.velocities
    return np.column_stack((np.interp(ts, traj.t, vel[:, 0]), np.interp(ts, traj.t, vel[:, 1])))


def tangent_units(traj: Trajectory, ts) -> NDArray[np.float64]:
    """
    (n, 2) forward unit tangents at the times ts.

    The finite-difference velocities of the bracketing samples are
    interpolated in time and normalised. Below TANGENT_SPEED_FLOOR the
    stored heading is used instead.

    Raises:
        OutOfRangeError: a time is outside the trajectory
        DegenerateTangentError: stationary and no stored heading
    """
    ts = np.atleast_1d(traj.clamp_times(ts))
    vel = _velocities_at(traj, ts)
    speed = np.hypot(vel[:, 0], vel[:, 1])
    moving = speed >= TANGENT_SPEED_FLOOR
    units = np.empty_like(vel)
    units[moving] = vel[moving] / speed[moving, None]
    for k in np.flatnonzero(~moving):
        heading = sample(traj, float(ts[k])).heading
        if heading is None:
            raise DegenerateTangentError(
                f"trajectory is stationary at t={float(ts[k])!r} and carries no heading to fall back on"
            )
        units[k] = (math.cos(heading), math.sin(heading))
    return units


def tangent_unit(traj: Trajectory, t0: float) -> UnitVec2:
    """Forward unit tangent of the trajectory at t0; see tangent_units."""
    ux, uy = tangent_units(traj, t0)[0]
    return UnitVec2(float(ux), float(uy))


def left_normals(units: NDArray[np.float64]) -> NDArray[np.float64]:
    """Rows of units rotated +90 degrees."""
    return np.column_stack((-units[:, 1], units[:, 0]))


def normal_unit(u: UnitVec2) -> UnitVec2:
    """Left-pointing normal: u rotated +90 degrees."""
    return UnitVec2(-u.uy, u.ux)


def _circle_terms(x: NDArray[np.float64], y: NDArray[np.float64]) -> Tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Curvature through each interior vertex and its neighbours, plus a mask of coincident triples."""
    a = np.column_stack((x[:-2], y[:-2]))
    b = np.column_stack((x[1:-1], y[1:-1]))
    c = np.column_stack((x[2:], y[2:]))
    ab, bc, ac = b - a, c - b, c - a
    d_ab = np.linalg.norm(ab, axis=1)
    d_bc = np.linalg.norm(bc, axis=1)
    d_ac = np.linalg.norm(ac, axis=1)
    denom = d_ab * d_bc * d_ac
    degenerate = denom == 0.0
    cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
    kappa = np.divide(2.0 * cross, denom, out=np.zeros_like(cross), where=~degenerate)
    return kappa, degenerate


def three_point_curvature(
    a: Tuple[float, float], b: Tuple[float, float], c: Tuple[float, float]
) -> float:
    """
    Signed curvature of the circle through three points; positive turns left.

    Raises:
        DuplicatePointError: if two of the points coincide
    """
    kappa, degenerate = _circle_terms(np.array([a[0], b[0], c[0]], dtype=float), np.array([a[1], b[1], c[1]], dtype=float))
    if degenerate[0]:
        raise DuplicatePointError(f"coincident points near ({b[0]!r}, {b[1]!r})")
    return float(kappa[0])


def polyline_curvatures(xs: Sequence[float], ys: Sequence[float], strict: bool = True) -> NDArray[np.float64]:
    """
    Per-vertex signed curvature of a polyline; endpoints copy the nearest interior value.

    With strict=False, vertices next to a coincident neighbour take the value
    interpolated from the surrounding well-defined vertices (0 if there are none).

    Raises:
        DuplicatePointError: strict and two consecutive vertices coincide
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = len(x)
    if n < 3:
        return np.zeros(n)
    interior, degenerate = _circle_terms(x, y)
    if degenerate.any():
        if strict:
            j = int(np.argmax(degenerate)) + 1
            raise DuplicatePointError(f"coincident points near ({float(x[j])!r}, {float(y[j])!r})")
        logger.debug(f"{int(degenerate.sum())} vertices next to coincident points, curvature interpolated")
        idx = np.arange(n - 2)
        if degenerate.all():
            interior = np.zeros(n - 2)
        else:
            interior = interior.copy()
            interior[degenerate] = np.interp(idx[degenerate], idx[~degenerate], interior[~degenerate])
    kappa = np.empty(n)
    kappa[1:-1] = interior
    kappa[0] = kappa[1]
    kappa[-1] = kappa[-2]
    return kappa


def curvature_at(traj: Trajectory, index: int) -> float:
    """
    Signed curvature (1/m) at a stored sample index.

    Raises:
        InputError: index out of range
        DuplicatePointError: the sample or a neighbour used for it coincides with another
    """
    n = len(traj)
    if not -n <= index < n:
        raise InputError(f"index {index} out of range for trajectory of {n} points")
    if n < 3:
        return 0.0
    j = min(max(index % n, 1), n - 2)
    kappa, degenerate = _circle_terms(traj.x[j - 1:j + 2], traj.y[j - 1:j + 2])
    if degenerate[0]:
        raise DuplicatePointError(f"coincident points near ({float(traj.x[j])!r}, {float(traj.y[j])!r})")
    return float(kappa[0])


def curvature_at_time(traj: Trajectory, t: float) -> float:
    """Per-sample curvature interpolated linearly in time."""
    return float(np.interp(traj.clamp_times(t), traj.t, traj.curvatures))


def headings_at(traj: Trajectory, ts) -> NDArray[np.float64]:
    """Stored heading at the times ts (shortest-arc interpolation), or the tangent angle without a heading channel."""
    ts = np.atleast_1d(traj.clamp_times(ts))
    if traj.has_heading:
        return wrap_angles(np.interp(ts, traj.t, np.unwrap(traj.heading)))
    units = tangent_units(traj, ts)
    return np.arctan2(units[:, 1], units[:, 0])


def heading_at(traj: Trajectory, t: float) -> float:
    """Stored heading at t, or the geometric tangent's angle when the channel is absent."""
    return float(headings_at(traj, t)[0])
