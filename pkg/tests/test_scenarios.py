"""
Tests for the named alignment presets.
"""

import pytest

from app.core.errors import ConfigError
from app.core.scenarios import (
    DEFAULT_PRESET,
    HIGHWAY_LENGTH,
    apply_preset_defaults,
    get_preset,
    kmh,
    list_presets,
)
from app.core.target_generator import synth_alignment


@pytest.mark.unit
class TestScenarios:
    """Test preset lookup and contents."""

    def test_list_presets(self):
        """Test every preset is listed."""
        assert list_presets() == sorted(
            ["highway-1.6km", "mix2010", "mix2512", "mix3015", "straight-200", "curve-200"]
        )

    def test_highway_length(self):
        """Test the highway surrogate spans its full chainage."""
        scenario = get_preset(DEFAULT_PRESET)
        assert scenario.alignment.total_length == pytest.approx(HIGHWAY_LENGTH)
        assert scenario.speed_overrides == {}

    def test_combined_track_curve_speed(self):
        """Test the curve speed is encoded as a lateral acceleration cap."""
        overrides = get_preset("mix3015").speed_overrides
        assert overrides["v_desired"] == pytest.approx(kmh(30.0))
        assert (overrides["a_lat_max"] * 50.0) ** 0.5 == pytest.approx(kmh(15.0))

    @pytest.mark.parametrize("name", ["mix2010", "mix2512", "mix3015", "straight-200", "curve-200"])
    def test_presets_synthesise(self, name):
        """Test every preset builds a continuous centerline."""
        points = synth_alignment(get_preset(name).alignment)
        assert points[-1].station == pytest.approx(get_preset(name).alignment.total_length)

    def test_unknown_preset(self):
        """Test an unknown name lists the alternatives."""
        with pytest.raises(ConfigError, match="Available: curve-200"):
            get_preset("nope")

    def test_apply_preset_defaults_leaves_other_input(self):
        """Test documents without a preset pass through untouched."""
        data = {"alignment": {"segments": []}}
        assert apply_preset_defaults(data) is data

    def test_kmh(self):
        """Test unit conversion."""
        assert kmh(36.0) == pytest.approx(10.0)
