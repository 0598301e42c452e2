"""
Pytest configuration and shared fixtures for the lead/lag tracking tests.
"""

import math
import os
from typing import Callable

import pytest

# Keep test runs away from the user's run directory and seed settings
os.environ.setdefault("LEADLAG_LOG_LEVEL", "WARNING")
os.environ.pop("LEADLAG_DEFAULT_SEED", None)
os.environ.pop("LEADLAG_BATCH_WORKERS", None)

from app.core.geometry import Trajectory, TrajectoryPoint
from app.core.run_config import build_run_config

SHORT_CONFIG = """\
alignment:
  segments:
    - kind: straight
      length: 60.0
speed_profile:
  v_desired: 8.0
  noise_fraction: 0.0
simulation:
  dt: 0.05
"""


def straight_trajectory(
    speed: float = 10.0,
    duration: float = 10.0,
    dt: float = 0.1,
    heading: float = 0.0,
    x0: float = 0.0,
    y0: float = 0.0,
    t0: float = 0.0,
    with_heading: bool = True,
) -> Trajectory:
    """Constant-speed straight line along `heading`."""
    n = int(round(duration / dt)) + 1
    c, s = math.cos(heading), math.sin(heading)
    points = []
    for k in range(n):
        tau = k * dt
        points.append(
            TrajectoryPoint(
                t=t0 + tau,
                x=x0 + speed * tau * c,
                y=y0 + speed * tau * s,
                v=speed,
                heading=heading if with_heading else None,
            )
        )
    return Trajectory.from_points(points)


def circle_trajectory(
    radius: float = 50.0,
    speed: float = 10.0,
    duration: float = 10.0,
    dt: float = 0.01,
    clockwise: bool = False,
    t0: float = 0.0,
    phi0: float = 0.0,
) -> Trajectory:
    """
    Constant-speed circle centred on the origin, starting at polar angle phi0.

    Counterclockwise unless `clockwise` is set.
    """
    omega = (speed / radius) * (-1.0 if clockwise else 1.0)
    n = int(round(duration / dt)) + 1
    points = []
    for k in range(n):
        phi = phi0 + omega * k * dt
        heading = phi + (math.pi / 2 if not clockwise else -math.pi / 2)
        points.append(
            TrajectoryPoint(
                t=t0 + k * dt,
                x=radius * math.cos(phi),
                y=radius * math.sin(phi),
                v=speed,
                heading=heading,
            )
        )
    return Trajectory.from_points(points)


def shifted(traj: Trajectory, dx: float = 0.0, dy: float = 0.0, dv: float = 0.0) -> Trajectory:
    """Copy of a trajectory with positions and speeds offset."""
    return Trajectory.from_points(
        TrajectoryPoint(t=p.t, x=p.x + dx, y=p.y + dy, v=p.v + dv, heading=p.heading) for p in traj
    )


@pytest.fixture
def make_straight() -> Callable[..., Trajectory]:
    """Factory for straight constant-speed trajectories."""
    return straight_trajectory


@pytest.fixture
def make_circle() -> Callable[..., Trajectory]:
    """Factory for circular constant-speed trajectories."""
    return circle_trajectory


@pytest.fixture
def straight_target() -> Trajectory:
    """10 m/s along +x for 10 s, sampled at 10 Hz."""
    return straight_trajectory()


@pytest.fixture
def run_config():
    """Defaults with explicit seeds, as apply_overrides would resolve them."""
    return build_run_config({"simulation": {"seed": 7}, "speed_profile": {"seed": 7}})


@pytest.fixture
def short_run_config():
    """A small straight scenario that simulates in well under a second."""
    return build_run_config(
        {
            "alignment": {"segments": [{"kind": "straight", "length": 60.0}]},
            "speed_profile": {"v_desired": 8.0, "noise_fraction": 0.0, "seed": 3},
            "simulation": {"dt": 0.05, "seed": 3},
        }
    )


@pytest.fixture
def run_config_file(tmp_path):
    """Write a YAML run configuration and return its path."""

    def _write(text: str, name: str = "run.yaml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
