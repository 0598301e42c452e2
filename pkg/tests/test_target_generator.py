"""
Tests for centerline loading/synthesis, speed profiles and target timestamping.
"""

import math

import numpy as np
import pytest

from app.core.errors import AlignmentError, DataFormatError, InfeasibleProfileError, InputError
from app.core.geometry import Trajectory, TrajectoryPoint, curvature_at
from app.core.run_config import AlignmentSegment, AlignmentSpec, SpeedProfileConfig, build_run_config
from app.core.scenarios import HIGHWAY_LENGTH, get_preset
from app.core.target_generator import (
    CenterlinePoint,
    SpeedProfile,
    apply_speed_noise,
    build_speed_profile,
    generate_target,
    load_centerline,
    synth_alignment,
    to_trajectory,
    write_centerline,
)


def _straight(length: float) -> AlignmentSpec:
    return AlignmentSpec(segments=[AlignmentSegment(kind="straight", length=length)])


def _profile(centerline, speeds) -> SpeedProfile:
    return SpeedProfile(
        stations=np.array([p.station for p in centerline]),
        speeds=np.array(speeds, dtype=float),
    )


@pytest.mark.unit
class TestLoadCenterline:
    """Test centerline CSV ingestion."""

    def test_valid_file(self, tmp_path):
        """Test a three-row file."""
        path = tmp_path / "c.csv"
        path.write_text("station,x,y\n0,0,0\n1,1,0\n2,2,0\n")
        points = load_centerline(path)
        assert len(points) == 3
        assert points[2] == CenterlinePoint(2.0, 2.0, 0.0)

    def test_duplicate_station(self, tmp_path):
        """Test a repeated station names the value and line."""
        path = tmp_path / "c.csv"
        path.write_text("station,x,y\n0,0,0\n1,1,0\n1,2,0\n")
        with pytest.raises(DataFormatError, match=r":4: duplicate station 1\.0"):
            load_centerline(path)

    def test_decreasing_station(self, tmp_path):
        """Test stations must increase."""
        path = tmp_path / "c.csv"
        path.write_text("station,x,y\n0,0,0\n2,2,0\n1,1,0\n")
        with pytest.raises(DataFormatError, match="not increasing"):
            load_centerline(path)

    def test_malformed_row(self, tmp_path):
        """Test a bad cell names its line."""
        path = tmp_path / "c.csv"
        path.write_text("station,x,y\n0,0,0\n1,x,0\n")
        with pytest.raises(DataFormatError, match=":3:"):
            load_centerline(path)

    def test_large_gap_warns(self, tmp_path, caplog):
        """Test station gaps over 2 m are logged."""
        path = tmp_path / "c.csv"
        path.write_text("station,x,y\n0,0,0\n5,5,0\n")
        load_centerline(path)
        assert "station gap" in caplog.text

    def test_highway_round_trip(self, tmp_path):
        """Test the surrogate highway survives write and reload."""
        points = synth_alignment(get_preset("highway-1.6km").alignment)
        path = write_centerline(points, tmp_path / "highway.csv")
        loaded = load_centerline(path)
        assert len(loaded) == 1595
        assert loaded[-1].station == pytest.approx(HIGHWAY_LENGTH)
        assert loaded == points


@pytest.mark.unit
class TestSynthAlignment:
    """Test alignment synthesis."""

    def test_single_straight(self):
        """Test a 100 m straight gives 101 collinear points."""
        points = synth_alignment(_straight(100.0))
        assert len(points) == 101
        assert points[-1].station == 100.0
        assert all(p.y == 0.0 for p in points)
        assert points[-1].x == pytest.approx(100.0)

    def test_straight_arc_straight(self):
        """Test total length and arc curvature."""
        spec = AlignmentSpec(segments=[
            AlignmentSegment(kind="straight", length=200.0),
            AlignmentSegment(kind="arc", length=300.0, radius=400.0, turn="left"),
            AlignmentSegment(kind="straight", length=200.0),
        ])
        points = synth_alignment(spec)
        assert points[-1].station == pytest.approx(700.0)

        traj = Trajectory.from_points(
            TrajectoryPoint(t=float(i), x=p.x, y=p.y, v=1.0) for i, p in enumerate(points)
        )
        assert curvature_at(traj, 350) == pytest.approx(1.0 / 400.0, rel=1e-6)

    def test_right_turn_is_negative(self):
        """Test a right arc bends towards -y."""
        spec = AlignmentSpec(segments=[AlignmentSegment(kind="arc", length=50.0, radius=100.0, turn="right")])
        assert synth_alignment(spec)[-1].y < 0.0

    def test_uneven_final_step(self):
        """Test a short final step is merged into the end station."""
        points = synth_alignment(_straight(10.3))
        assert [p.station for p in points][-2:] == [9.0, 10.3]

    def test_spiral_heading_change(self):
        """Test an entering spiral turns through L·kappa/2."""
        spec = AlignmentSpec(segments=[
            AlignmentSegment(kind="spiral", length=100.0, radius=200.0, turn="left", entering=True),
        ])
        points = synth_alignment(spec, spacing=0.5)
        end_heading = math.atan2(points[-1].y - points[-2].y, points[-1].x - points[-2].x)
        assert end_heading == pytest.approx(100.0 / 200.0 / 2.0, abs=0.01)

    def test_discontinuous_tangent(self):
        """Test a declared start heading that does not match."""
        spec = AlignmentSpec(segments=[
            AlignmentSegment(kind="arc", length=100.0, radius=100.0, turn="left"),
            AlignmentSegment(kind="straight", length=10.0, start_heading=0.0),
        ])
        with pytest.raises(AlignmentError, match="continuous"):
            synth_alignment(spec)

    def test_bad_spacing(self):
        """Test spacing must be positive."""
        with pytest.raises(InputError):
            synth_alignment(_straight(10.0), spacing=0.0)


@pytest.mark.unit
class TestSpeedProfile:
    """Test the forward/backward speed profile."""

    def test_acceleration_ramp(self):
        """Test cruise speed is reached at v²/(2a)."""
        centerline = synth_alignment(_straight(1000.0))
        cfg = SpeedProfileConfig(v_desired=27.778, a_accel=1.0, a_decel=1.0)
        profile = build_speed_profile(centerline, cfg)

        first_cruise = int(np.argmax(profile.speeds >= 27.778 - 1e-9))
        assert 385 <= first_cruise <= 387
        assert profile.speeds[0] == 0.0
        assert profile.speeds[-1] == 0.0
        assert profile.speeds.max() == pytest.approx(27.778)

    def test_curve_cap(self):
        """Test the lateral-acceleration cap on an arc."""
        radius = 385.8
        spec = AlignmentSpec(segments=[AlignmentSegment(kind="arc", length=300.0, radius=radius)])
        cfg = SpeedProfileConfig(v_desired=50.0, a_lat_max=2.0)
        profile = build_speed_profile(synth_alignment(spec), cfg)
        assert profile.caps[150] == pytest.approx(math.sqrt(2.0 * radius), rel=1e-4)
        assert profile.caps[150] == pytest.approx(27.78, abs=0.01)

    def test_respects_limits(self):
        """Test the profile never exceeds a cap or an acceleration bound."""
        centerline = synth_alignment(get_preset("mix3015").alignment)
        cfg = SpeedProfileConfig(v_desired=30 / 3.6, a_lat_max=(15 / 3.6) ** 2 / 50.0)
        profile = build_speed_profile(centerline, cfg)
        v2 = profile.speeds ** 2
        ds = np.diff(profile.stations)
        assert np.all(profile.speeds <= profile.caps + 1e-12)
        assert np.all(np.diff(v2) <= 2.0 * cfg.a_accel * ds + 1e-9)
        assert np.all(-np.diff(v2) <= 2.0 * cfg.a_decel * ds + 1e-9)

    def test_infeasible_start(self):
        """Test a start speed that cannot be shed in time."""
        cfg = SpeedProfileConfig(v_desired=30.0, v_start=25.0)
        with pytest.raises(InfeasibleProfileError):
            build_speed_profile(synth_alignment(_straight(50.0)), cfg)

    def test_start_above_cap(self):
        """Test a start speed above the first station's cap."""
        with pytest.raises(InfeasibleProfileError):
            build_speed_profile(synth_alignment(_straight(50.0)), SpeedProfileConfig(v_desired=10.0, v_start=12.0))


@pytest.mark.unit
class TestSpeedNoise:
    """Test multiplicative speed noise."""

    def test_zero_fraction_is_identity(self):
        """Test no noise returns the same profile."""
        profile = _profile(synth_alignment(_straight(10.0)), [5.0] * 11)
        assert apply_speed_noise(profile, SpeedProfileConfig(noise_fraction=0.0)) is profile

    def test_deterministic_per_seed(self):
        """Test a fixed seed reproduces the noise."""
        profile = _profile(synth_alignment(_straight(100.0)), [10.0] * 101)
        cfg = SpeedProfileConfig(noise_fraction=0.02, seed=5)
        first = apply_speed_noise(profile, cfg).speeds
        second = apply_speed_noise(profile, cfg).speeds
        assert np.array_equal(first, second)
        assert not np.array_equal(first, apply_speed_noise(profile, cfg.model_copy(update={"seed": 6})).speeds)

    def test_bounded_and_zero_preserving(self):
        """Test noise stays within the fraction and keeps standstill at zero."""
        speeds = [0.0] + [10.0] * 99 + [0.0]
        profile = _profile(synth_alignment(_straight(100.0)), speeds)
        noisy = apply_speed_noise(profile, SpeedProfileConfig(noise_fraction=0.02, seed=1)).speeds
        assert noisy[0] == 0.0 and noisy[-1] == 0.0
        assert np.all(np.abs(noisy[1:-1] - 10.0) <= 0.2 + 1e-12)


@pytest.mark.unit
class TestToTrajectory:
    """Test timestamping."""

    def test_uniform_motion(self):
        """Test 100 m at 10 m/s takes exactly 10 s."""
        centerline = synth_alignment(_straight(100.0))
        traj = to_trajectory(centerline, _profile(centerline, [10.0] * 101))
        assert traj.duration == 10.0
        assert traj[0].heading == 0.0

    def test_mean_speed_step(self):
        """Test a 10 -> 20 m/s step over 1 m takes 1/15 s."""
        centerline = [CenterlinePoint(0.0, 0.0, 0.0), CenterlinePoint(1.0, 1.0, 0.0)]
        traj = to_trajectory(centerline, _profile(centerline, [10.0, 20.0]))
        assert traj.duration == pytest.approx(1.0 / 15.0, abs=1e-12)

    def test_trapezoidal_total(self):
        """Test the total against hand trapezoidal integration."""
        centerline = synth_alignment(_straight(50.0))
        speeds = [5.0 + 0.1 * i for i in range(51)]
        traj = to_trajectory(centerline, _profile(centerline, speeds))
        expected = sum(2.0 / (speeds[i] + speeds[i + 1]) for i in range(50))
        assert traj.duration == pytest.approx(expected, abs=1e-9)

    def test_interior_zero_speed(self):
        """Test standstill is only allowed at the ends."""
        centerline = synth_alignment(_straight(3.0))
        with pytest.raises(InputError, match="only endpoints"):
            to_trajectory(centerline, _profile(centerline, [1.0, 0.0, 1.0, 1.0]))

    def test_length_mismatch(self):
        """Test one speed per station."""
        centerline = synth_alignment(_straight(3.0))
        with pytest.raises(InputError):
            to_trajectory(centerline, _profile(centerline[:2], [1.0, 1.0]))


@pytest.mark.unit
class TestGenerateTarget:
    """Test the full generation pipeline."""

    def test_highway_defaults(self):
        """Test the default preset at the default seed."""
        cfg = build_run_config({"speed_profile": {"seed": 42}})
        centerline, _, target = generate_target(cfg)
        assert centerline[-1].station == pytest.approx(HIGHWAY_LENGTH)
        assert len(target) == 1595
        assert all(b.t > a.t for a, b in zip(target, target.points[1:]))

    def test_same_seed_same_target(self):
        """Test generation is deterministic."""
        cfg = build_run_config({"alignment": {"preset": "mix2010"}, "speed_profile": {"seed": 11}})
        assert generate_target(cfg)[2].points == generate_target(cfg)[2].points
