"""
Decoupled tracking control: LQR steering on the lateral error state and a
cascaded (station -> speed -> acceleration) PID for the longitudinal axis,
with the lead/lag compensation added to the PID output.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.compensation import compensation_accel
from app.core.errors import DareConvergenceError, InputError
from app.core.geometry import (
    Trajectory,
    TrajectoryPoint,
    angle_diff,
    curvature_at_time,
    sample,
    tangent_unit,
    wrap_angle,
)
from app.core.leadlag import offsets
from app.core.run_config import (
    DualPidConfig,
    LqrConfig,
    PidGains,
    RunConfig,
    VehicleParams,
)
from app.core.vehicle_model import ControlInput, VehicleState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LateralErrorState:
    """Path-tracking error state [e, e_dot, theta_e, theta_e_dot]; e is left-positive."""
    e: float
    e_dot: float
    theta_e: float
    theta_e_dot: float

    def __post_init__(self):
        values = (self.e, self.e_dot, self.theta_e, self.theta_e_dot)
        if not all(math.isfinite(v) for v in values):
            raise InputError(f"lateral error state must be finite, got {values!r}")
        object.__setattr__(self, "theta_e", wrap_angle(self.theta_e))

    def as_array(self) -> np.ndarray:
        return np.array([self.e, self.e_dot, self.theta_e, self.theta_e_dot], dtype=float)


# ═══════════════════════════════════════════════════════════════════════════
# LQR
# ═══════════════════════════════════════════════════════════════════════════

def lateral_model(v: float, dt: float, wheelbase: float) -> Tuple[np.ndarray, np.ndarray]:
    """Discrete constant-speed kinematic error dynamics at speed v."""
    A = np.zeros((4, 4))
    A[0, 0] = 1.0
    A[0, 1] = dt
    A[1, 2] = v
    A[2, 2] = 1.0
    A[2, 3] = dt
    B = np.zeros((4, 1))
    B[3, 0] = v / wheelbase
    return A, B


def _riccati_map(A, B, Q, R, P) -> np.ndarray:
    AtP = A.T @ P
    S = R + B.T @ P @ B
    return Q + AtP @ A - AtP @ B @ np.linalg.solve(S, B.T @ P @ A)


def lqr_gain(A, B, R, P) -> np.ndarray:
    """K = (R + B'PB)^-1 B'PA."""
    return np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def dare_residual(A, B, Q, R, P) -> float:
    """Max-norm residual of the discrete algebraic Riccati equation at P."""
    A, B, Q, R = _as_matrices(A, B, Q, R)
    return float(np.max(np.abs(_riccati_map(A, B, Q, R, np.asarray(P, dtype=float)) - P)))


def _as_matrices(A, B, Q, R):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    B = B.reshape(A.shape[0], -1)
    Q = np.asarray(Q, dtype=float)
    Q = np.diag(Q) if Q.ndim == 1 else np.atleast_2d(Q)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    return A, B, Q, R


def solve_dare(
    A,
    B,
    Q,
    R,
    tol: float = 1e-9,
    max_iter: int = 10000,
    p0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Solve the discrete algebraic Riccati equation by fixed-point iteration.

        P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA

    Iteration starts from p0 (default Q) and stops at the first P whose
    residual max-norm is within tol.

    Args:
        A: n x n state matrix
        B: n x m input matrix
        Q: n x n state weight, or its diagonal
        R: m x m input weight, or a scalar
        tol: Residual tolerance
        max_iter: Iteration cap
        p0: Warm start

    Returns:
        (P, K) with K = (R + B'PB)^-1 B'PA

    Raises:
        DareConvergenceError: no convergence, or the closed loop A - BK is not stable
    """
    A, B, Q, R = _as_matrices(A, B, Q, R)
    P = Q.copy() if p0 is None else np.array(p0, dtype=float)
    history: List[float] = []

    for _ in range(max_iter):
        P_next = _riccati_map(A, B, Q, R, P)
        residual = float(np.max(np.abs(P_next - P)))
        history.append(residual)
        if not math.isfinite(residual):
            raise DareConvergenceError(
                f"Riccati iteration diverged after {len(history)} iterations", history
            )
        if residual <= tol:
            break
        P = P_next
    else:
        raise DareConvergenceError(
            f"Riccati iteration did not reach tol={tol} in {max_iter} iterations "
            f"(last residual {history[-1]:.3e})",
            history,
        )

    K = lqr_gain(A, B, R, P)
    radius = float(np.max(np.abs(np.linalg.eigvals(A - B @ K))))
    if not radius < 1.0:
        raise DareConvergenceError(
            f"closed loop is not stable: spectral radius of A - BK is {radius:.6f}", history
        )

    logger.debug(f"DARE converged in {len(history)} iterations, residual {history[-1]:.3e}")
    return P, K


def lateral_control(err: LateralErrorState, K: Sequence[float], max_steer: float) -> float:
    """State feedback steer = -K·x, saturated to ±max_steer."""
    k = np.asarray(K, dtype=float).reshape(-1)
    steer = -float(k @ err.as_array())
    return min(max(steer, -max_steer), max_steer)


class LqrGainScheduler:
    """
    LQR gains per speed bucket.

    Speeds below min_speed are linearised at min_speed. A new bucket is
    warm-started from the Riccati solution of the nearest solved bucket.
    """

    def __init__(self, cfg: LqrConfig, params: VehicleParams, dt: float):
        self.cfg = cfg
        self.params = params
        self.dt = dt
        self.Q = np.diag(np.asarray(cfg.q_diag, dtype=float))
        self.R = np.array([[cfg.r]])
        self._solutions: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def bucket(self, v: float) -> int:
        return int(round(max(v, self.cfg.min_speed) / self.cfg.speed_bucket))

    def linearization_speed(self, v: float) -> float:
        return max(self.bucket(v) * self.cfg.speed_bucket, self.cfg.min_speed)

    def solution(self, v: float) -> Tuple[np.ndarray, np.ndarray]:
        """(P, K) for the bucket containing v."""
        key = self.bucket(v)
        cached = self._solutions.get(key)
        if cached is not None:
            return cached

        p0 = None
        if self._solutions:
            nearest = min(self._solutions, key=lambda k: (abs(k - key), k))
            p0 = self._solutions[nearest][0]

        v_lin = self.linearization_speed(v)
        A, B = lateral_model(v_lin, self.dt, self.params.wheelbase)
        P, K = solve_dare(A, B, self.Q, self.R, self.cfg.dare_tol, self.cfg.dare_max_iter, p0)
        self._solutions[key] = (P, K)
        logger.debug(f"Solved LQR gains at v={v_lin:.2f} m/s: K={K.ravel().tolist()}")
        return P, K

    def gain(self, v: float) -> np.ndarray:
        return self.solution(v)[1]

    @property
    def cached_buckets(self) -> List[int]:
        return sorted(self._solutions)


# ═══════════════════════════════════════════════════════════════════════════
# DUAL PID
# ═══════════════════════════════════════════════════════════════════════════

@dataclass
class PidState:
    """Integrator and previous error of one PID loop."""
    integral: float = 0.0
    prev_error: Optional[float] = None


@dataclass
class DualPidState:
    outer: PidState = field(default_factory=PidState)
    inner: PidState = field(default_factory=PidState)


def pid_update(gains: PidGains, error: float, dt: float, state: PidState) -> float:
    """
    One PID step. The integrator is clamped to ±integral_limit; the
    derivative is zero on the first call.
    """
    limit = gains.integral_limit
    state.integral = min(max(state.integral + error * dt, -limit), limit)
    derivative = 0.0 if state.prev_error is None else (error - state.prev_error) / dt
    state.prev_error = error
    return gains.kp * error + gains.ki * state.integral + gains.kd * derivative


def longitudinal_control(
    cfg: DualPidConfig,
    station_err: float,
    v_target: float,
    v_actual: float,
    dt: float,
    state: DualPidState,
) -> float:
    """
    Cascaded longitudinal control.

    The outer loop turns station error (m, positive = behind) into a speed
    correction; the inner loop tracks v_target + correction and returns an
    acceleration (m/s²).
    """
    if not (math.isfinite(dt) and dt > 0):
        raise InputError(f"dt must be > 0, got {dt!r}")
    delta_v = pid_update(cfg.outer, station_err, dt, state.outer)
    speed_err = (v_target + delta_v) - v_actual
    return pid_update(cfg.inner, speed_err, dt, state.inner)


# ═══════════════════════════════════════════════════════════════════════════
# CONTROL TICK
# ═══════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class TickDiagnostics:
    """What the controller saw and commanded on one tick."""
    dp: float
    dq: float
    theta_e: float
    accel_pid: float
    accel_comp: float
    steer_ff: float
    steer_fb: float


@dataclass
class ControllerState:
    """Mutable controller memory owned by one simulation loop."""
    scheduler: LqrGainScheduler
    pid: DualPidState = field(default_factory=DualPidState)
    prev_e: Optional[float] = None
    prev_theta_e: Optional[float] = None
    last: Optional[TickDiagnostics] = None

    @classmethod
    def create(cls, cfg: RunConfig) -> "ControllerState":
        return cls(scheduler=LqrGainScheduler(cfg.lqr, cfg.vehicle, cfg.simulation.dt))


def control_tick(
    target: Trajectory,
    state: VehicleState,
    t: float,
    cfg: RunConfig,
    ctrl: ControllerState,
) -> ControlInput:
    """
    Compute one (accel, steer) command.

    steer = atan(L·kappa_ref) - K·x when feed-forward is on, else -K·x.
    accel = dual PID on (station error = -dp, target speed) plus the
    lead/lag compensation when enabled. Plant saturation is left to the
    vehicle model.
    """
    dt = cfg.simulation.dt
    ref = sample(target, t)
    tracked = TrajectoryPoint(t=t, x=state.x, y=state.y, v=state.v, heading=state.heading)
    dp, dq = offsets(target, tracked, t)
    theta_e = angle_diff(state.heading, tangent_unit(target, t).angle)

    e_dot = 0.0 if ctrl.prev_e is None else (dq - ctrl.prev_e) / dt
    theta_e_dot = 0.0 if ctrl.prev_theta_e is None else angle_diff(theta_e, ctrl.prev_theta_e) / dt
    ctrl.prev_e = dq
    ctrl.prev_theta_e = theta_e

    err = LateralErrorState(e=dq, e_dot=e_dot, theta_e=theta_e, theta_e_dot=theta_e_dot)
    K = ctrl.scheduler.gain(state.v)
    steer_fb = lateral_control(err, K, cfg.vehicle.max_steer)
    steer_ff = 0.0
    if cfg.lqr.feedforward:
        steer_ff = math.atan(cfg.vehicle.wheelbase * curvature_at_time(target, t))

    accel_pid = longitudinal_control(cfg.pid, -dp, ref.v, state.v, dt, ctrl.pid)
    accel_comp = compensation_accel(dp, cfg.compensation) if cfg.compensation.enabled else 0.0

    ctrl.last = TickDiagnostics(
        dp=dp,
        dq=dq,
        theta_e=theta_e,
        accel_pid=accel_pid,
        accel_comp=accel_comp,
        steer_ff=steer_ff,
        steer_fb=steer_fb,
    )
    return ControlInput(accel=accel_pid + accel_comp, steer=steer_ff + steer_fb)
