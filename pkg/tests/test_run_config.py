"""
Tests for run configuration loading, validation and overrides.
"""

import json
import os
from unittest.mock import patch

import pytest

from app.core.errors import ConfigError
from app.core.run_config import (
    DEFAULT_BANDS,
    AlignmentSegment,
    RunConfig,
    apply_overrides,
    build_run_config,
    config_hash,
    load_run_config,
)


@pytest.mark.unit
class TestBuildRunConfig:
    """Test validation of raw mappings."""

    def test_defaults(self):
        """Test the built-in defaults."""
        cfg = build_run_config({})
        assert cfg.compensation.threshold_m == 0.5
        assert cfg.compensation.window_s == 1.0
        assert cfg.vehicle.wheelbase == 2.7
        assert cfg.lqr.q_diag == (1.0, 0.1, 1.0, 0.1)
        assert cfg.pid.outer.kp == 0.8
        assert cfg.pid.inner.ki == 0.1
        assert cfg.speed_profile.v_desired == 27.778
        assert cfg.speed_profile.noise_fraction == 0.02
        assert cfg.simulation.dt == 0.01
        assert cfg.analysis.bands["leadlag_error"] == DEFAULT_BANDS["leadlag_error"]

    def test_unknown_key_has_path(self):
        """Test unknown keys are rejected with their dotted path."""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"lqr": {"q_diag": [1, 1, 1, 1], "rr": 3}})
        assert "lqr.rr" in exc.value.key_paths
        assert "lqr.rr" in str(exc.value)
        assert exc.value.exit_code == 2

    def test_out_of_range_values(self):
        """Test range constraints name every offending key."""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"simulation": {"dt": 0.5}, "compensation": {"window_s": 0}})
        assert set(exc.value.key_paths) >= {"simulation.dt", "compensation.window_s"}

    def test_non_positive_q_weight(self):
        """Test LQR weights must be positive."""
        with pytest.raises(ConfigError):
            build_run_config({"lqr": {"q_diag": [1, 0, 1, 1]}})

    def test_arc_requires_radius(self):
        """Test arcs and spirals need a radius."""
        with pytest.raises(ConfigError, match="requires a radius"):
            build_run_config({"alignment": {"segments": [{"kind": "arc", "length": 10}]}})

    def test_minimum_radius(self):
        """Test radii under 30 m are refused."""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"alignment": {"segments": [{"kind": "arc", "length": 10, "radius": 10}]}})
        assert exc.value.key_paths[0].startswith("alignment.segments.0")

    def test_single_alignment_source(self):
        """Test preset and segments are mutually exclusive."""
        with pytest.raises(ConfigError, match="only one"):
            build_run_config({"alignment": {
                "preset": "mix2010",
                "segments": [{"kind": "straight", "length": 10}],
            }})

    def test_band_order(self):
        """Test bands need low < high."""
        with pytest.raises(ConfigError):
            build_run_config({"analysis": {"bands": {"speed_error": [0.5, -0.1]}}})

    def test_preset_speed_defaults(self):
        """Test a preset contributes its speeds unless the document sets them."""
        cfg = build_run_config({"alignment": {"preset": "mix2010"}})
        assert cfg.speed_profile.v_desired == pytest.approx(20.0 / 3.6)
        assert cfg.speed_profile.a_lat_max == pytest.approx((10.0 / 3.6) ** 2 / 50.0)

        cfg = build_run_config({"alignment": {"preset": "mix2010"}, "speed_profile": {"v_desired": 3.0}})
        assert cfg.speed_profile.v_desired == 3.0

    def test_unknown_preset(self):
        """Test an unknown preset is a configuration error with its key path."""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"alignment": {"preset": "moon-base"}})
        assert exc.value.key_paths == ["alignment.preset"]

    def test_segment_curvature_sign(self):
        """Test left turns are positive."""
        assert AlignmentSegment(kind="arc", length=1, radius=100, turn="left").curvature == 0.01
        assert AlignmentSegment(kind="arc", length=1, radius=100, turn="right").curvature == -0.01
        assert AlignmentSegment(kind="straight", length=1).curvature == 0.0


@pytest.mark.unit
class TestLoadRunConfig:
    """Test reading configuration files."""

    def test_yaml(self, run_config_file):
        """Test a YAML document."""
        path = run_config_file("compensation:\n  threshold_m: 0.3\nsimulation:\n  seed: 9\n")
        cfg = load_run_config(str(path))
        assert cfg.compensation.threshold_m == 0.3
        assert cfg.seed == 9

    def test_json(self, run_config_file):
        """Test a JSON document."""
        path = run_config_file(json.dumps({"vehicle": {"wheelbase": 3.0}}), name="run.json")
        assert load_run_config(str(path)).vehicle.wheelbase == 3.0

    def test_empty_file(self, run_config_file):
        """Test an empty document means defaults."""
        assert load_run_config(str(run_config_file(""))) == RunConfig()

    def test_none_is_defaults(self):
        """Test no path means defaults."""
        assert load_run_config(None) == RunConfig()

    def test_missing_file(self, tmp_path):
        """Test an absent file."""
        with pytest.raises(ConfigError, match="Cannot read"):
            load_run_config(str(tmp_path / "absent.yaml"))

    def test_parse_error(self, run_config_file):
        """Test malformed YAML."""
        with pytest.raises(ConfigError, match="Cannot parse"):
            load_run_config(str(run_config_file("a: [1, 2\n")))

    def test_top_level_list(self, run_config_file):
        """Test the document must be a mapping."""
        with pytest.raises(ConfigError, match="mapping"):
            load_run_config(str(run_config_file("- 1\n- 2\n")))

    def test_error_names_source(self, run_config_file):
        """Test validation errors mention the file."""
        path = run_config_file("pid:\n  outer:\n    kp: -1\n")
        with pytest.raises(ConfigError) as exc:
            load_run_config(str(path))
        assert str(path) in str(exc.value)
        assert "pid.outer.kp" in exc.value.key_paths


@pytest.mark.unit
class TestOverrides:
    """Test CLI overrides and seed resolution."""

    def test_seed_sets_both_sections(self):
        """Test a CLI seed reaches simulation and noise."""
        cfg = apply_overrides(RunConfig(), seed=17)
        assert cfg.simulation.seed == 17
        assert cfg.speed_profile.seed == 17

    @patch.dict(os.environ, {'LEADLAG_DEFAULT_SEED': '99'})
    def test_default_seed_from_environment(self):
        """Test unset seeds resolve to the environment default."""
        cfg = apply_overrides(RunConfig())
        assert cfg.simulation.seed == 99
        assert cfg.speed_profile.seed == 99

    def test_file_seed_kept(self):
        """Test an explicit speed-profile seed is not replaced."""
        cfg = apply_overrides(build_run_config({"speed_profile": {"seed": 5}, "simulation": {"seed": 6}}))
        assert cfg.speed_profile.seed == 5
        assert cfg.simulation.seed == 6

    def test_dt_and_compensation(self):
        """Test the remaining flags."""
        cfg = apply_overrides(RunConfig(), dt=0.02, no_compensation=True)
        assert cfg.simulation.dt == 0.02
        assert cfg.compensation.enabled is False

    def test_invalid_override(self):
        """Test a CLI dt outside its range is a configuration error."""
        with pytest.raises(ConfigError):
            apply_overrides(RunConfig(), dt=1.0)

    def test_hash_is_stable(self):
        """Test equal configs hash equally and different ones do not."""
        a = apply_overrides(RunConfig(), seed=1)
        b = apply_overrides(RunConfig(), seed=1)
        c = apply_overrides(RunConfig(), seed=2)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)
        assert len(config_hash(a)) == 64

    def test_resolved_config_replays(self):
        """Test the dumped config rebuilds to the same hash."""
        cfg = apply_overrides(build_run_config({"alignment": {"preset": "mix2512"}}), seed=4)
        assert config_hash(build_run_config(cfg.to_dict())) == config_hash(cfg)
