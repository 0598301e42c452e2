"""
Threshold-gated acceleration compensation.

Inside the dead band |dp| <= threshold nothing is added. Outside it the
compensation is the constant acceleration that, held for one window T,
would move the offset exactly onto the band edge:

    a = -2 (dp - threshold·sign(dp)) / T²

clamped to [a_min, a_max].
"""

import math

from app.core.errors import InputError
from app.core.run_config import CompensationConfig

__all__ = ["CompensationConfig", "compensation_accel", "raw_compensation_accel"]


def raw_compensation_accel(dp: float, cfg: CompensationConfig) -> float:
    """Compensation before clamping."""
    if not math.isfinite(dp):
        raise InputError(f"dp must be finite, got {dp!r}")
    if abs(dp) <= cfg.threshold:
        return 0.0
    edge = cfg.threshold if dp > 0 else -cfg.threshold
    return -2.0 * (dp - edge) / (cfg.window * cfg.window)


def compensation_accel(dp: float, cfg: CompensationConfig) -> float:
    """
    Acceleration compensation (m/s²) for a longitudinal offset dp (m).

    Negative when leading, positive when lagging, zero inside the band.

    Raises:
        InputError: dp is not finite
    """
    raw = raw_compensation_accel(dp, cfg)
    return min(max(raw, cfg.a_min), cfg.a_max)
