"""
Run configuration for generate / simulate / analyze / report.

One structured document (YAML or JSON) with sections alignment, speed_profile,
vehicle, lqr, pid, compensation, simulation and analysis. Unknown keys are
rejected. Precedence: built-in defaults < environment < config file < CLI flags.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.config import Config
from app.core.errors import ConfigError

logger = logging.getLogger(__name__)

CHANNELS = ("speed_error", "heading_error", "lateral_error", "leadlag_error")

# Bands read off the highway simulation results; used for comparison only.
DEFAULT_BANDS: Dict[str, Tuple[float, float]] = {
    "speed_error": (-0.1, 0.5),
    "heading_error": (-0.0005, 0.0015),
    "lateral_error": (-0.0001, 0.00026),
    "leadlag_error": (-0.5, 0.5),
}


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CompensationConfig(_Section):
    """
    Threshold-gated acceleration compensation.

    Attributes:
        threshold_m: Half-width of the longitudinal dead band
        window_s: Correction window T_ω; nominal time to reach the band edge
        a_min: Lower clamp on the compensation (negative)
        a_max: Upper clamp on the compensation (positive)
        enabled: Add the compensation to the longitudinal command
    """
    threshold_m: float = Field(default=0.5, gt=0)
    window_s: float = Field(default=1.0, gt=0)
    a_min: float = Field(default=-3.0, lt=0)
    a_max: float = Field(default=3.0, gt=0)
    enabled: bool = True

    @property
    def threshold(self) -> float:
        return self.threshold_m

    @property
    def window(self) -> float:
        return self.window_s


class VehicleParams(_Section):
    """Kinematic bicycle parameters and actuator limits."""
    wheelbase: float = Field(default=2.7, gt=0)
    max_steer: float = Field(default=0.6, gt=0)
    max_steer_rate: float = Field(default=0.7, gt=0)
    max_accel: float = Field(default=3.0, gt=0)
    max_decel: float = Field(default=-6.0, lt=0)


class LqrConfig(_Section):
    """
    LQR weights and Riccati solver settings.

    q_diag weights the error state [e, e_dot, theta_e, theta_e_dot].
    Gains are linearised at max(v, min_speed) and cached per speed_bucket m/s.
    """
    q_diag: Tuple[float, float, float, float] = (1.0, 0.1, 1.0, 0.1)
    r: float = Field(default=10.0, gt=0)
    dare_tol: float = Field(default=1e-9, gt=0)
    dare_max_iter: int = Field(default=10000, gt=0)
    min_speed: float = Field(default=5.0, gt=0)
    speed_bucket: float = Field(default=1.0, gt=0)
    feedforward: bool = True

    @model_validator(mode="after")
    def _check_weights(self) -> "LqrConfig":
        if any(not (w > 0) for w in self.q_diag):
            raise ValueError("q_diag weights must all be > 0")
        return self


class PidGains(_Section):
    """Gains and integrator clamp for one PID loop."""
    kp: float = Field(default=0.0, ge=0)
    ki: float = Field(default=0.0, ge=0)
    kd: float = Field(default=0.0, ge=0)
    integral_limit: float = Field(default=1.0, gt=0)


class DualPidConfig(_Section):
    """Cascaded longitudinal control: station loop (outer) feeding a speed loop (inner)."""
    outer: PidGains = PidGains(kp=0.8, ki=0.0, kd=0.1, integral_limit=2.0)
    inner: PidGains = PidGains(kp=1.2, ki=0.1, kd=0.0, integral_limit=15.0)


class SpeedProfileConfig(_Section):
    """Speed profile along the centerline: accelerate, cruise, decelerate."""
    v_desired: float = Field(default=27.778, gt=0)
    a_accel: float = Field(default=1.0, gt=0)
    a_decel: float = Field(default=1.0, gt=0)
    a_lat_max: float = Field(default=2.0, gt=0)
    noise_fraction: float = Field(default=0.02, ge=0, lt=0.5)
    seed: Optional[int] = None
    v_start: float = Field(default=0.0, ge=0)
    v_end: float = Field(default=0.0, ge=0)


class AlignmentSegment(_Section):
    """
    One alignment element.

    Spirals ramp curvature linearly between 0 and 1/radius
    (entering=True: 0 -> 1/radius; entering=False: 1/radius -> 0).
    start_heading, when given, must match the heading where the segment begins.
    """
    kind: Literal["straight", "arc", "spiral"]
    length: float = Field(gt=0)
    radius: Optional[float] = Field(default=None, ge=30)
    turn: Literal["left", "right"] = "left"
    entering: bool = True
    start_heading: Optional[float] = None

    @model_validator(mode="after")
    def _radius_required(self) -> "AlignmentSegment":
        if self.kind in ("arc", "spiral") and self.radius is None:
            raise ValueError(f"{self.kind} segment requires a radius")
        return self

    @property
    def curvature(self) -> float:
        """Signed curvature at the tight end (positive = left)."""
        if self.radius is None:
            return 0.0
        sign = 1.0 if self.turn == "left" else -1.0
        return sign / self.radius


class AlignmentSpec(_Section):
    """Ordered alignment segments and the starting pose."""
    segments: List[AlignmentSegment] = Field(min_length=1)
    start_x: float = 0.0
    start_y: float = 0.0
    start_heading: float = 0.0

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)


class AlignmentConfig(_Section):
    """
    Where the centerline comes from: a named preset, a centerline CSV,
    or inline segments. With none given the highway preset is used.
    """
    preset: Optional[str] = None
    centerline_path: Optional[str] = None
    segments: Optional[List[AlignmentSegment]] = None
    start_x: float = 0.0
    start_y: float = 0.0
    start_heading: float = 0.0
    spacing: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _single_source(self) -> "AlignmentConfig":
        sources = [s for s in (self.preset, self.centerline_path, self.segments) if s is not None]
        if len(sources) > 1:
            raise ValueError("set only one of preset, centerline_path, segments")
        return self

    def to_spec(self) -> Optional[AlignmentSpec]:
        """Inline segments as an AlignmentSpec, or None for other sources."""
        if self.segments is None:
            return None
        return AlignmentSpec(
            segments=self.segments,
            start_x=self.start_x,
            start_y=self.start_y,
            start_heading=self.start_heading,
        )


class SimulationConfig(_Section):
    """Closed-loop clock and guards."""
    dt: float = Field(default=0.01, gt=0, le=0.1)
    max_duration_s: Optional[float] = Field(default=None, gt=0)
    seed: Optional[int] = None
    eps: float = Field(default=0.01, ge=0)
    divergence_limit_m: float = Field(default=20.0, gt=0)


class AnalysisConfig(_Section):
    """Error analysis settings; dt and eps default to the simulation's."""
    dt: Optional[float] = Field(default=None, gt=0)
    eps: Optional[float] = Field(default=None, ge=0)
    bands: Optional[Dict[Literal["speed_error", "heading_error", "lateral_error", "leadlag_error"],
                         Tuple[float, float]]] = Field(default_factory=lambda: dict(DEFAULT_BANDS))

    @model_validator(mode="after")
    def _ordered_bands(self) -> "AnalysisConfig":
        for channel, (lo, hi) in (self.bands or {}).items():
            if not lo < hi:
                raise ValueError(f"band for {channel} must satisfy low < high, got ({lo}, {hi})")
        return self


class RunConfig(_Section):
    """Complete run configuration."""
    alignment: AlignmentConfig = AlignmentConfig()
    speed_profile: SpeedProfileConfig = SpeedProfileConfig()
    vehicle: VehicleParams = VehicleParams()
    lqr: LqrConfig = LqrConfig()
    pid: DualPidConfig = DualPidConfig()
    compensation: CompensationConfig = CompensationConfig()
    simulation: SimulationConfig = SimulationConfig()
    analysis: AnalysisConfig = AnalysisConfig()

    @property
    def seed(self) -> int:
        """Effective seed for the run."""
        if self.simulation.seed is not None:
            return self.simulation.seed
        return Config.get_default_seed()

    @property
    def analysis_dt(self) -> float:
        return self.analysis.dt if self.analysis.dt is not None else self.simulation.dt

    @property
    def analysis_eps(self) -> float:
        return self.analysis.eps if self.analysis.eps is not None else self.simulation.eps

    def to_dict(self) -> Dict[str, Any]:
        """Plain JSON-compatible dictionary."""
        return json.loads(self.model_dump_json())


def _validation_error(err: ValidationError, source: str) -> ConfigError:
    key_paths = []
    lines = []
    for item in err.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        key_paths.append(path)
        lines.append(f"  - {path}: {item['msg']}")
    return ConfigError(f"Invalid run configuration ({source}):\n" + "\n".join(lines), key_paths)


def build_run_config(data: Optional[Dict[str, Any]] = None, source: str = "<dict>") -> RunConfig:
    """
    Validate a raw mapping into a RunConfig, raising ConfigError with key paths.

    A named alignment preset contributes its speed-profile values for keys
    the mapping leaves unset.
    """
    from app.core.scenarios import apply_preset_defaults

    try:
        return RunConfig.model_validate(apply_preset_defaults(data or {}))
    except ValidationError as e:
        raise _validation_error(e, source) from e


def load_run_config(path: Optional[str]) -> RunConfig:
    """
    Load a run configuration from a YAML or JSON file.

    Args:
        path: Config file path, or None for built-in defaults

    Returns:
        Validated RunConfig
    """
    if path is None:
        return build_run_config({}, "<defaults>")

    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read run configuration {config_path}: {e}") from e

    try:
        if config_path.suffix.lower() == ".json":
            data = json.loads(text) if text.strip() else {}
        else:
            data = yaml.safe_load(text) or {}
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse run configuration {config_path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"Run configuration {config_path} must be a mapping at the top level")

    logger.info(f"Loaded run configuration from {config_path}")
    return build_run_config(data, str(config_path))


def apply_overrides(
    cfg: RunConfig,
    seed: Optional[int] = None,
    dt: Optional[float] = None,
    no_compensation: bool = False,
) -> RunConfig:
    """
    Apply CLI flag overrides and resolve seeds.

    The resolved config always carries explicit seeds in both the simulation
    and speed_profile sections so it can be replayed from its own dump.
    """
    data = cfg.to_dict()
    if seed is not None:
        data["simulation"]["seed"] = seed
        data["speed_profile"]["seed"] = seed
    if dt is not None:
        data["simulation"]["dt"] = dt
    if no_compensation:
        data["compensation"]["enabled"] = False

    if data["simulation"]["seed"] is None:
        data["simulation"]["seed"] = Config.get_default_seed()
    if data["speed_profile"]["seed"] is None:
        data["speed_profile"]["seed"] = data["simulation"]["seed"]

    return build_run_config(data, "<overrides>")


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
