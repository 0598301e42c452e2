"""
Named alignment presets.

highway-1.6km is a mixed expressway surrogate 1594.433 m long, driven at
100 km/h. The mixNNNN presets are 200 m straight + 200 m curve tracks whose
curve speed is enforced through the lateral-acceleration cap
(a_lat_max = v_curve² / R).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

from app.core.errors import ConfigError
from app.core.run_config import AlignmentSegment, AlignmentSpec

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "highway-1.6km"
HIGHWAY_LENGTH = 1594.433
TEST_TRACK_RADIUS = 50.0


def kmh(speed: float) -> float:
    """km/h to m/s."""
    return speed / 3.6


@dataclass(frozen=True)
class Scenario:
    """A preset alignment plus the speed-profile values it implies."""
    name: str
    description: str
    alignment: AlignmentSpec
    speed_overrides: Dict[str, Any] = field(default_factory=dict)


def _highway() -> Scenario:
    head = [
        AlignmentSegment(kind="straight", length=300.0),
        AlignmentSegment(kind="spiral", length=50.0, radius=600.0, turn="left", entering=True),
        AlignmentSegment(kind="arc", length=200.0, radius=600.0, turn="left"),
        AlignmentSegment(kind="spiral", length=50.0, radius=600.0, turn="left", entering=False),
        AlignmentSegment(kind="straight", length=150.0),
        AlignmentSegment(kind="spiral", length=50.0, radius=350.0, turn="right", entering=True),
        AlignmentSegment(kind="arc", length=150.0, radius=350.0, turn="right"),
        AlignmentSegment(kind="spiral", length=50.0, radius=350.0, turn="right", entering=False),
    ]
    used = sum(seg.length for seg in head)
    segments = head + [AlignmentSegment(kind="straight", length=HIGHWAY_LENGTH - used)]
    return Scenario(
        name=DEFAULT_PRESET,
        description="Mixed expressway surrogate, K0+000.000 to K1+594.433, 100 km/h",
        alignment=AlignmentSpec(segments=segments),
    )


def _combined(name: str, straight_kmh: float, curve_kmh: float) -> Scenario:
    v_curve = kmh(curve_kmh)
    return Scenario(
        name=name,
        description=(
            f"200 m straight at {straight_kmh:g} km/h then 200 m curve "
            f"(R={TEST_TRACK_RADIUS:g} m) at {curve_kmh:g} km/h"
        ),
        alignment=AlignmentSpec(
            segments=[
                AlignmentSegment(kind="straight", length=200.0),
                AlignmentSegment(kind="arc", length=200.0, radius=TEST_TRACK_RADIUS, turn="left"),
            ]
        ),
        speed_overrides={
            "v_desired": kmh(straight_kmh),
            "a_lat_max": v_curve * v_curve / TEST_TRACK_RADIUS,
        },
    )


def _build_presets() -> Dict[str, Scenario]:
    presets = [
        _highway(),
        _combined("mix2010", 20.0, 10.0),
        _combined("mix2512", 25.0, 12.0),
        _combined("mix3015", 30.0, 15.0),
        Scenario(
            name="straight-200",
            description="200 m straight at 30 km/h",
            alignment=AlignmentSpec(segments=[AlignmentSegment(kind="straight", length=200.0)]),
            speed_overrides={"v_desired": kmh(30.0)},
        ),
        Scenario(
            name="curve-200",
            description=f"200 m curve (R={TEST_TRACK_RADIUS:g} m) at 15 km/h",
            alignment=AlignmentSpec(
                segments=[AlignmentSegment(kind="arc", length=200.0, radius=TEST_TRACK_RADIUS, turn="left")]
            ),
            speed_overrides={"v_desired": kmh(15.0)},
        ),
    ]
    return {p.name: p for p in presets}


_PRESETS = _build_presets()


def list_presets() -> List[str]:
    return sorted(_PRESETS)


def get_preset(name: str) -> Scenario:
    """Look up a preset by name; unknown names are a configuration error."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"Unknown alignment preset '{name}'. Available: {', '.join(list_presets())}",
            ["alignment.preset"],
        ) from None


def apply_preset_defaults(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge a preset's speed-profile values under a raw config mapping.

    Keys the document sets explicitly win over the preset.
    """
    alignment = data.get("alignment")
    if not isinstance(alignment, dict) or not isinstance(alignment.get("preset"), str):
        return data
    scenario = get_preset(alignment["preset"])
    if not scenario.speed_overrides:
        return data

    merged = dict(data)
    speed = merged.get("speed_profile")
    speed = dict(speed) if isinstance(speed, dict) else {}
    for key, value in scenario.speed_overrides.items():
        speed.setdefault(key, value)
    merged["speed_profile"] = speed
    return merged
