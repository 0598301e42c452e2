"""
Consolidated Markdown report from an analysis directory.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List

from app.core.errors import MissingInputsError
from app.core.error_analysis import ERRORS_FILE, SUMMARY_FILE
from app.core.run_config import CHANNELS
from app.core.trajectory_io import read_json

logger = logging.getLogger(__name__)

REPORT_FILE = "report.md"
REQUIRED_FILES = (SUMMARY_FILE, ERRORS_FILE)

CHANNEL_TITLES = {
    "speed_error": ("Speed error", "m/s"),
    "heading_error": ("Heading error", "rad"),
    "lateral_error": ("Lateral error", "m"),
    "leadlag_error": ("Lead/lag error", "m"),
}


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _channel_section(name: str, stats: Dict[str, Any]) -> List[str]:
    title, unit = CHANNEL_TITLES[name]
    lines = [
        f"## {title}",
        "",
        "| statistic | value |",
        "|---|---|",
        f"| max abs ({unit}) | {_fmt(stats['max_abs'])} |",
        f"| RMS ({unit}) | {_fmt(stats['rms'])} |",
        f"| mean ({unit}) | {_fmt(stats['mean'])} |",
    ]
    if "band" in stats:
        lo, hi = stats["band"]
        lines.append(f"| within [{_fmt(lo)}, {_fmt(hi)}] {unit} | {stats['band_coverage']:.1%} |")
    lines.append("")
    return lines


def build_report(summary: Dict[str, Any], title: str = "Tracking error report") -> str:
    """Render a summary document as Markdown."""
    lines = [
        f"# {title}",
        "",
        f"- samples: {summary['samples']}",
        f"- clock step: {summary['dt']} s",
        f"- classification tolerance: {summary['eps']} m",
    ]
    if summary.get("config_hash"):
        lines.append(f"- config hash: `{summary['config_hash']}`")
    lines.append("")

    for name in CHANNELS:
        lines.extend(_channel_section(name, summary["channels"][name]))

    episodes = summary.get("leadlag_episodes")
    if episodes:
        lines.extend([
            "## Lead/lag compensation episodes",
            "",
            f"- threshold: ±{_fmt(episodes['threshold'])} m",
            f"- episodes outside the band: {episodes['count']}",
            f"- longest episode: {_fmt(episodes['longest_s'])} s",
            f"- final sample inside the band: {'yes' if episodes['final_in_band'] else 'no'}",
            "",
        ])

    conventions = summary.get("conventions")
    if conventions:
        lines.extend(["## Sign conventions", ""])
        lines.extend(f"- {name}: {text}" for name, text in conventions.items())
        lines.append("")

    return "\n".join(lines)


def write_report(analysis_dir: Path) -> Path:
    """
    Build report.md inside an analysis directory.

    Raises:
        MissingInputsError: summary.json or errors.csv absent
    """
    analysis_dir = Path(analysis_dir)
    missing = [name for name in REQUIRED_FILES if not (analysis_dir / name).is_file()]
    if missing:
        raise MissingInputsError(str(analysis_dir), missing)

    summary = read_json(analysis_dir / SUMMARY_FILE)
    path = analysis_dir / REPORT_FILE
    path.write_text(build_report(summary), encoding="utf-8")
    logger.info(f"Wrote report to {path}")
    return path
