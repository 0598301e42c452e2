"""
Error analysis of a (target, tracked) trajectory pair.

Four channels on a common clock:
    speed_error   = tracked v - target v                  (m/s, positive = too fast)
    heading_error = wrap(tracked heading - target heading) (rad)
    lateral_error = dq                                     (m, positive = left)
    leadlag_error = dp                                     (m, positive = lead)
plus leadlag_time = dp / target v (s), NaN where the target is nearly stopped.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from app.core.config import Config
from app.core.errors import DataFormatError, InputError
from app.core.geometry import Trajectory, headings_at, positions_at, speeds_at, wrap_angles
from app.core.leadlag import (
    DEFAULT_DT,
    DEFAULT_EPS,
    OffsetSeries,
    export_offset_series,
    leadlag_episodes,
    offset_series,
)
from app.core.run_config import CHANNELS
from app.core.trajectory_io import manifest_path, read_csv_rows, read_json, write_csv, write_json

logger = structlog.get_logger()

LEADLAG_TIME_SPEED_FLOOR = 0.01
FIRST_WINDOW_S = 10.0
LAST_WINDOW_S = 4.0
WINDOW_TOLERANCE = 1e-9

ERRORS_FILE = "errors.csv"
SUMMARY_FILE = "summary.json"
PAIRING_FILE = "pairing.csv"
PAIRING_FIRST_FILE = "pairing_first_10s.csv"
PAIRING_LAST_FILE = "pairing_last_4s.csv"
OFFSETS_FILE = "offsets.csv"

ERROR_COLUMNS = ["t", *CHANNELS, "leadlag_time"]
PAIRING_COLUMNS = ["t", "target_x", "target_y", "tracked_x", "tracked_y"]

SIGN_CONVENTIONS = {
    "speed_error": "tracked - target (m/s); positive = faster than scheduled",
    "heading_error": "wrap(tracked - target) in (-pi, pi] (rad); positive = rotated counterclockwise",
    "lateral_error": "projection on the target's left normal (m); positive = left",
    "leadlag_error": "projection on the target's forward tangent (m); positive = lead",
    "leadlag_time": "leadlag_error / target speed (s); NaN below 0.01 m/s",
}


@dataclass(frozen=True, eq=False)
class ErrorSeries:
    """Per-tick error channels and the paired positions they came from."""
    t: np.ndarray
    speed_error: np.ndarray
    heading_error: np.ndarray
    lateral_error: np.ndarray
    leadlag_error: np.ndarray
    leadlag_time: np.ndarray
    target_x: np.ndarray
    target_y: np.ndarray
    tracked_x: np.ndarray
    tracked_y: np.ndarray
    dt: float = DEFAULT_DT
    eps: float = DEFAULT_EPS
    offsets: Optional[OffsetSeries] = None

    def __len__(self) -> int:
        return len(self.t)

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise InputError(f"unknown error channel '{name}'")
        return getattr(self, name)


@dataclass
class ChannelSummary:
    """Statistics of one channel; band fields are None when no band is configured."""
    max_abs: float
    rms: float
    mean: float
    band: Optional[Tuple[float, float]] = None
    band_coverage: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"max_abs": self.max_abs, "rms": self.rms, "mean": self.mean}
        if self.band is not None:
            data["band"] = list(self.band)
            data["band_coverage"] = self.band_coverage
        return data


@dataclass
class EpisodeSummary:
    """Excursions of the lead/lag channel outside ±threshold."""
    threshold: float
    count: int
    longest_s: float
    final_in_band: bool
    episodes: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "count": self.count,
            "longest_s": self.longest_s,
            "final_in_band": self.final_in_band,
            "episodes": [list(e) for e in self.episodes],
        }


@dataclass
class ErrorSummary:
    samples: int
    dt: float
    eps: float
    channels: Dict[str, ChannelSummary]
    leadlag_episodes: EpisodeSummary

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": Config.FORMAT_VERSION,
            "samples": self.samples,
            "dt": self.dt,
            "eps": self.eps,
            "channels": {name: s.to_dict() for name, s in self.channels.items()},
            "leadlag_episodes": self.leadlag_episodes.to_dict(),
            "conventions": SIGN_CONVENTIONS,
        }


def compute_errors(
    target: Trajectory,
    tracked: Trajectory,
    dt: float = DEFAULT_DT,
    eps: float = DEFAULT_EPS,
) -> ErrorSeries:
    """
    All error channels on the common clock of the two trajectories.

    Lateral and lead/lag channels are taken from leadlag.offset_series.

    Raises:
        EmptyOverlapError: no shared time window
    """
    offsets = offset_series(target, tracked, dt, eps)
    t = offsets.t
    ref_xy = positions_at(target, t)
    cur_xy = positions_at(tracked, t)
    ref_v = speeds_at(target, t)
    stopped = ref_v < LEADLAG_TIME_SPEED_FLOOR
    leadlag_time = np.divide(offsets.dp, ref_v, out=np.full(len(t), math.nan), where=~stopped)

    return ErrorSeries(
        t=t,
        speed_error=speeds_at(tracked, t) - ref_v,
        heading_error=wrap_angles(headings_at(tracked, t) - headings_at(target, t)),
        lateral_error=offsets.dq,
        leadlag_error=offsets.dp,
        leadlag_time=leadlag_time,
        target_x=ref_xy[:, 0],
        target_y=ref_xy[:, 1],
        tracked_x=cur_xy[:, 0],
        tracked_y=cur_xy[:, 1],
        dt=dt,
        eps=eps,
        offsets=offsets,
    )


def _channel_summary(values: np.ndarray, band: Optional[Tuple[float, float]]) -> ChannelSummary:
    max_abs = float(np.max(np.abs(values)))
    rms = min(float(np.sqrt(np.mean(values * values))), max_abs)
    coverage = None
    if band is not None:
        lo, hi = band
        coverage = float(np.count_nonzero((values >= lo) & (values <= hi))) / len(values)
    return ChannelSummary(
        max_abs=max_abs,
        rms=rms,
        mean=float(np.mean(values)),
        band=tuple(band) if band is not None else None,
        band_coverage=coverage,
    )


def summarize(
    series: ErrorSeries,
    bands: Optional[Dict[str, Tuple[float, float]]] = None,
    threshold: float = 0.5,
) -> ErrorSummary:
    """
    Max |x|, RMS, mean and band coverage per channel, plus lead/lag episodes
    outside ±threshold.
    """
    if len(series) == 0:
        raise InputError("cannot summarise an empty error series")
    bands = bands or {}

    channels = {name: _channel_summary(series.channel(name), bands.get(name)) for name in CHANNELS}

    dp = series.leadlag_error
    episodes = leadlag_episodes(series.t, dp, threshold)
    longest = max((end - start for start, end in episodes), default=0.0)
    episode_summary = EpisodeSummary(
        threshold=threshold,
        count=len(episodes),
        longest_s=longest,
        final_in_band=bool(abs(dp[-1]) <= threshold),
        episodes=episodes,
    )

    return ErrorSummary(
        samples=len(series),
        dt=series.dt,
        eps=series.eps,
        channels=channels,
        leadlag_episodes=episode_summary,
    )


def _window_indices(t: np.ndarray, first_s: Optional[float] = None, last_s: Optional[float] = None) -> np.ndarray:
    if first_s is not None:
        return np.nonzero(t - t[0] <= first_s + WINDOW_TOLERANCE)[0]
    return np.nonzero(t[-1] - t <= last_s + WINDOW_TOLERANCE)[0]


def _pairing_rows(series: ErrorSeries, indices) -> List[Tuple[float, ...]]:
    return [
        (float(series.t[i]), float(series.target_x[i]), float(series.target_y[i]),
         float(series.tracked_x[i]), float(series.tracked_y[i]))
        for i in indices
    ]


def export(
    series: ErrorSeries,
    summary: ErrorSummary,
    out_dir: Path,
    format: str = "csv",
    config_hash: Optional[str] = None,
) -> Dict[str, Path]:
    """
    Write the analysis artifacts into out_dir.

    errors.csv holds every channel; <channel>.csv one channel each;
    summary.json the statistics; pairing*.csv the same-instant target and
    tracked positions for the full run, its first 10 s and its last 4 s.

    Returns:
        Mapping of artifact name to path
    """
    if format != "csv":
        raise InputError(f"unsupported export format '{format}' (only 'csv')")

    out_dir = Path(out_dir)
    paths: Dict[str, Path] = {}
    conventions = {"conventions": SIGN_CONVENTIONS, "dt": series.dt, "eps": series.eps}

    rows = zip(*(getattr(series, c).tolist() for c in ERROR_COLUMNS))
    paths["errors"] = write_csv(out_dir / ERRORS_FILE, ERROR_COLUMNS, rows, config_hash, conventions)

    for name in CHANNELS:
        channel_rows = zip(series.t.tolist(), series.channel(name).tolist())
        paths[name] = write_csv(
            out_dir / f"{name}.csv", ["t", name], channel_rows, config_hash,
            {"convention": SIGN_CONVENTIONS[name]},
        )

    all_rows = _pairing_rows(series, range(len(series)))
    paths["pairing"] = write_csv(out_dir / PAIRING_FILE, PAIRING_COLUMNS, all_rows, config_hash)
    paths["pairing_first_10s"] = write_csv(
        out_dir / PAIRING_FIRST_FILE, PAIRING_COLUMNS,
        _pairing_rows(series, _window_indices(series.t, first_s=FIRST_WINDOW_S)),
        config_hash, {"window": {"first_s": FIRST_WINDOW_S}},
    )
    paths["pairing_last_4s"] = write_csv(
        out_dir / PAIRING_LAST_FILE, PAIRING_COLUMNS,
        _pairing_rows(series, _window_indices(series.t, last_s=LAST_WINDOW_S)),
        config_hash, {"window": {"last_s": LAST_WINDOW_S}},
    )

    if series.offsets is not None:
        paths["offsets"] = export_offset_series(series.offsets, out_dir / OFFSETS_FILE, config_hash)

    summary_doc = summary.to_dict()
    summary_doc["config_hash"] = config_hash
    paths["summary"] = write_json(out_dir / SUMMARY_FILE, summary_doc)

    logger.info(
        "Exported error analysis",
        out_dir=str(out_dir),
        samples=len(series),
        max_leadlag=summary.channels["leadlag_error"].max_abs,
    )
    return paths


def _parse_cell(text: str, column: str, path: Path, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"invalid number {text!r} in column '{column}'", str(path), line) from None


def load_error_series(analysis_dir: Path) -> ErrorSeries:
    """Re-read an exported errors.csv and pairing.csv into an ErrorSeries."""
    analysis_dir = Path(analysis_dir)
    errors_path = analysis_dir / ERRORS_FILE
    pairing_path = analysis_dir / PAIRING_FILE

    columns: Dict[str, List[float]] = {c: [] for c in ERROR_COLUMNS + PAIRING_COLUMNS[1:]}
    for line, row in read_csv_rows(errors_path, ERROR_COLUMNS):
        for c in ERROR_COLUMNS:
            columns[c].append(_parse_cell(row[c], c, errors_path, line))
    pair_t = []
    for line, row in read_csv_rows(pairing_path, PAIRING_COLUMNS):
        pair_t.append(_parse_cell(row["t"], "t", pairing_path, line))
        for c in PAIRING_COLUMNS[1:]:
            columns[c].append(_parse_cell(row[c], c, pairing_path, line))
    if pair_t != columns["t"]:
        raise DataFormatError("pairing.csv and errors.csv do not share the same clock", str(pairing_path))

    meta = read_json(manifest_path(errors_path)) if manifest_path(errors_path).exists() else {}
    return ErrorSeries(
        dt=float(meta.get("dt", DEFAULT_DT)),
        eps=float(meta.get("eps", DEFAULT_EPS)),
        **{c: np.array(v, dtype=float) for c, v in columns.items()},
    )


def analyze(
    target: Trajectory,
    tracked: Trajectory,
    out_dir: Path,
    dt: float = DEFAULT_DT,
    eps: float = DEFAULT_EPS,
    bands: Optional[Dict[str, Tuple[float, float]]] = None,
    threshold: float = 0.5,
    config_hash: Optional[str] = None,
) -> Tuple[ErrorSeries, ErrorSummary, Dict[str, Path]]:
    """compute_errors, summarize and export in one call."""
    series = compute_errors(target, tracked, dt, eps)
    summary = summarize(series, bands, threshold)
    paths = export(series, summary, out_dir, config_hash=config_hash)
    return series, summary, paths
