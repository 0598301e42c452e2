"""
Tests for the Markdown report.
"""

import pytest

from app.core.error_analysis import ERRORS_FILE, SUMMARY_FILE, analyze
from app.core.errors import MissingInputsError
from app.core.report import REPORT_FILE, build_report, write_report
from app.core.run_config import DEFAULT_BANDS
from tests.conftest import shifted


def _stats(value: float, band=None) -> dict:
    stats = {"max_abs": value, "rms": value, "mean": -value}
    if band is not None:
        stats.update(band=list(band), band_coverage=0.875)
    return stats


@pytest.fixture
def summary():
    return {
        "samples": 1001,
        "dt": 0.01,
        "eps": 0.01,
        "config_hash": "abc123",
        "channels": {
            "speed_error": _stats(0.25, band=(-0.1, 0.5)),
            "heading_error": _stats(0.01),
            "lateral_error": _stats(0.05),
            "leadlag_error": _stats(0.7, band=(-0.5, 0.5)),
        },
        "leadlag_episodes": {"threshold": 0.5, "count": 2, "longest_s": 1.5, "final_in_band": True},
        "conventions": {"leadlag_error": "positive = lead"},
    }


@pytest.mark.unit
class TestBuildReport:
    """Test report rendering."""

    def test_sections(self, summary):
        """Test every channel gets a section."""
        text = build_report(summary)
        assert text.startswith("# Tracking error report")
        for title in ("## Speed error", "## Heading error", "## Lateral error", "## Lead/lag error"):
            assert title in text
        assert "- samples: 1001" in text
        assert "`abc123`" in text

    def test_band_rows_only_when_present(self, summary):
        """Test coverage rows appear for channels with a band."""
        text = build_report(summary)
        assert text.count("87.5%") == 2
        assert "| within [-0.5, 0.5] m | 87.5% |" in text

    def test_episodes_and_conventions(self, summary):
        """Test the compensation and sign-convention sections."""
        text = build_report(summary)
        assert "- episodes outside the band: 2" in text
        assert "- final sample inside the band: yes" in text
        assert "- leadlag_error: positive = lead" in text

    def test_optional_sections_omitted(self, summary):
        """Test a minimal summary renders without them."""
        del summary["leadlag_episodes"], summary["conventions"], summary["config_hash"]
        text = build_report(summary)
        assert "episodes" not in text
        assert "Sign conventions" not in text
        assert "config hash" not in text


@pytest.mark.unit
class TestWriteReport:
    """Test report.md on disk."""

    def test_writes_report(self, tmp_path, straight_target):
        """Test a report from a real analysis directory."""
        analyze(straight_target, shifted(straight_target, dx=0.2), tmp_path, bands=DEFAULT_BANDS)
        path = write_report(tmp_path)
        assert path == tmp_path / REPORT_FILE
        assert "## Lead/lag error" in path.read_text()

    def test_missing_inputs(self, tmp_path):
        """Test every absent input is named."""
        with pytest.raises(MissingInputsError) as exc:
            write_report(tmp_path)
        assert exc.value.missing == [SUMMARY_FILE, ERRORS_FILE]
        assert exc.value.exit_code == 3

    def test_missing_errors_only(self, tmp_path, straight_target):
        """Test a partial directory."""
        analyze(straight_target, straight_target, tmp_path)
        (tmp_path / ERRORS_FILE).unlink()
        with pytest.raises(MissingInputsError) as exc:
            write_report(tmp_path)
        assert exc.value.missing == [ERRORS_FILE]
