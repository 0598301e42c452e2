"""
CSV readers and writers for trajectories and their manifest sidecars.

Trajectory CSV: header `t,x,y,v,heading`, SI units, radians, UTF-8, LF line
endings. Floats are written with repr() so a read-back is bit-exact.
Every CSV written here gets a `<file>.manifest.json` next to it.
"""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from app.core.config import Config
from app.core.errors import DataFormatError, InputError
from app.core.geometry import Trajectory, TrajectoryPoint

logger = logging.getLogger(__name__)

MANIFEST_SUFFIX = ".manifest.json"


def format_float(value: Optional[float]) -> str:
    """Shortest round-trip text for a float; None becomes an empty cell."""
    if value is None:
        return ""
    return repr(float(value))


def manifest_path(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.name + MANIFEST_SUFFIX)


def write_manifest(
    csv_path: Path,
    columns: Sequence[str],
    row_count: int,
    config_hash: Optional[str] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write the JSON sidecar describing a CSV file.

    The manifest carries no wall-clock values so reruns stay bit-identical.
    """
    manifest = {
        "format_version": Config.FORMAT_VERSION,
        "file": Path(csv_path).name,
        "columns": list(columns),
        "row_count": row_count,
        "config_hash": config_hash,
    }
    if extra:
        manifest.update(extra)

    path = manifest_path(csv_path)
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataFormatError(f"cannot write manifest: {e}", str(path)) from e
    return path


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config_hash: Optional[str] = None,
    manifest_extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write rows under a header and add the manifest sidecar.

    Float cells are formatted with format_float; other cells with str().
    """
    path = Path(path)
    count = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow(
                    [format_float(c) if isinstance(c, float) or c is None else str(c) for c in row]
                )
                count += 1
    except OSError as e:
        raise DataFormatError(f"cannot write file: {e}", str(path)) from e

    write_manifest(path, columns, count, config_hash, manifest_extra)
    logger.debug(f"Wrote {count} rows to {path}")
    return path


def read_csv_rows(path: Path, required_columns: Sequence[str]) -> Iterator[Tuple[int, Dict[str, str]]]:
    """
    Yield (line_number, row) for every data row of a CSV file.

    Raises:
        DataFormatError: unreadable file, missing columns or short rows
    """
    path = Path(path)
    try:
        handle = path.open("r", newline="", encoding="utf-8")
    except OSError as e:
        raise DataFormatError(f"cannot read file: {e}", str(path)) from e

    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in required_columns if c not in header]
        if missing:
            raise DataFormatError(
                f"missing column(s) {', '.join(missing)}; expected header {','.join(required_columns)}",
                str(path),
                1,
            )
        for row in reader:
            if None in row.values() or None in row:
                raise DataFormatError("row has the wrong number of fields", str(path), reader.line_num)
            yield reader.line_num, row


def parse_float(row: Dict[str, str], column: str, path: Path, line: int, allow_empty: bool = False) -> Optional[float]:
    """Parse one finite float cell, naming file and line on failure."""
    text = (row.get(column) or "").strip()
    if not text:
        if allow_empty:
            return None
        raise DataFormatError(f"empty value in column '{column}'", str(path), line)
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"invalid number {text!r} in column '{column}'", str(path), line) from None
    if not math.isfinite(value):
        raise DataFormatError(f"non-finite value {text!r} in column '{column}'", str(path), line)
    return value


def read_trajectory(path: Path) -> Trajectory:
    """
    Read a trajectory CSV.

    The heading cell may be empty for recordings without a heading channel.

    Raises:
        DataFormatError: malformed content, with the offending line number
    """
    path = Path(path)
    points: List[TrajectoryPoint] = []
    prev_t = None
    for line, row in read_csv_rows(path, Config.TRAJECTORY_COLUMNS):
        t = parse_float(row, "t", path, line)
        if prev_t is not None and not t > prev_t:
            raise DataFormatError(f"time must be strictly increasing, got {t!r} after {prev_t!r}", str(path), line)
        try:
            point = TrajectoryPoint(
                t=t,
                x=parse_float(row, "x", path, line),
                y=parse_float(row, "y", path, line),
                v=parse_float(row, "v", path, line),
                heading=parse_float(row, "heading", path, line, allow_empty=True),
            )
        except InputError as e:
            raise DataFormatError(str(e), str(path), line) from e
        points.append(point)
        prev_t = t

    if len(points) < 2:
        raise DataFormatError(f"a trajectory needs at least 2 rows, found {len(points)}", str(path))
    logger.info(f"Read {len(points)} trajectory points from {path}")
    return Trajectory.from_points(points)


def write_trajectory(
    traj: Trajectory,
    path: Path,
    config_hash: Optional[str] = None,
    manifest_extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a trajectory CSV with its manifest."""
    rows = ((p.t, p.x, p.y, p.v, p.heading) for p in traj.points)
    return write_csv(path, Config.TRAJECTORY_COLUMNS, rows, config_hash, manifest_extra)


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    """Write a JSON document with stable key order."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataFormatError(f"cannot write file: {e}", str(path)) from e
    return path


def read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataFormatError(f"cannot read file: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise DataFormatError(f"invalid JSON: {e.msg}", str(path), e.lineno) from e
