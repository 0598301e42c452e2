"""
Kinematic bicycle plant.

    x' = v cos(theta)
    y' = v sin(theta)
    theta' = v tan(steer) / wheelbase
    v' = accel

Commands are saturated to the vehicle limits, then the state is advanced
with one classical Runge-Kutta step.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.errors import InputError
from app.core.geometry import wrap_angle
from app.core.run_config import VehicleParams

logger = logging.getLogger(__name__)

MAX_DT = 0.1

__all__ = ["VehicleState", "ControlInput", "VehicleParams", "saturate_input", "step"]


@dataclass(frozen=True)
class VehicleState:
    """Pose and speed of the tracked vehicle."""
    x: float
    y: float
    heading: float
    v: float

    def __post_init__(self):
        for name in ("x", "y", "heading", "v"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InputError(f"VehicleState.{name} must be finite, got {value!r}")
        if self.v < 0.0:
            raise InputError(f"VehicleState.v must be >= 0, got {self.v!r}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading, self.v])


@dataclass(frozen=True)
class ControlInput:
    """Longitudinal acceleration (m/s²) and front-wheel steering angle (rad)."""
    accel: float
    steer: float

    def __post_init__(self):
        if not (math.isfinite(self.accel) and math.isfinite(self.steer)):
            raise InputError(f"control input must be finite, got accel={self.accel!r} steer={self.steer!r}")


def saturate_input(
    control: ControlInput,
    params: VehicleParams,
    dt: float,
    prev_steer: Optional[float] = None,
) -> ControlInput:
    """
    Clamp a command to the actuator limits.

    The steering rate limit applies relative to prev_steer when given.
    """
    accel = min(max(control.accel, params.max_decel), params.max_accel)
    steer = min(max(control.steer, -params.max_steer), params.max_steer)
    if prev_steer is not None:
        max_delta = params.max_steer_rate * dt
        steer = min(max(steer, prev_steer - max_delta), prev_steer + max_delta)
    return ControlInput(accel=accel, steer=steer)


def _derivative(state: np.ndarray, accel: float, tan_steer: float, wheelbase: float) -> np.ndarray:
    _, _, theta, v = state
    return np.array([v * np.cos(theta), v * np.sin(theta), v * tan_steer / wheelbase, accel])


def step(
    state: VehicleState,
    control: ControlInput,
    params: VehicleParams,
    dt: float,
    prev_steer: Optional[float] = None,
) -> VehicleState:
    """
    Advance the plant by dt seconds.

    Args:
        state: Current vehicle state
        control: Commanded acceleration and steering
        params: Vehicle geometry and actuator limits
        dt: Step length, 0 < dt <= 0.1 s
        prev_steer: Previously applied steering angle for the rate limit

    Returns:
        New VehicleState; speed never drops below zero

    Raises:
        InputError: non-finite command or dt out of range
    """
    if not (math.isfinite(dt) and 0.0 < dt <= MAX_DT):
        raise InputError(f"dt must be in (0, {MAX_DT}], got {dt!r}")

    applied = saturate_input(control, params, dt, prev_steer)
    # Braking that would reverse within the step stops exactly at v = 0 instead.
    accel = max(applied.accel, -state.v / dt)
    tan_steer = math.tan(applied.steer)
    L = params.wheelbase

    s0 = state.as_array()
    k1 = _derivative(s0, accel, tan_steer, L)
    k2 = _derivative(s0 + dt / 2.0 * k1, accel, tan_steer, L)
    k3 = _derivative(s0 + dt / 2.0 * k2, accel, tan_steer, L)
    k4 = _derivative(s0 + dt * k3, accel, tan_steer, L)

    x, y, theta, v = (s0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).tolist()
    return VehicleState(x=x, y=y, heading=wrap_angle(theta), v=max(v, 0.0))
