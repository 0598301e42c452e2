"""
Exception hierarchy for the tracking toolkit.

Each exception carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for bad input data, 4 for runtime divergence.
"""

from typing import Any, Dict, List, Optional


class TrackingError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ConfigError(TrackingError, ValueError):
    """Run configuration is missing, malformed, or fails validation."""

    exit_code = 2

    def __init__(self, message: str, key_paths: Optional[List[str]] = None):
        super().__init__(message)
        self.key_paths = key_paths or []


class InputDataError(TrackingError, ValueError):
    """Input data (trajectory, centerline, parameters) is unusable."""

    exit_code = 3


class InputError(InputDataError):
    """A scalar argument is non-finite or outside its domain."""


class DataFormatError(InputDataError):
    """A data file could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class OutOfRangeError(InputDataError):
    """A time query falls outside a trajectory's domain."""

    def __init__(self, t: float, start: float, end: float):
        super().__init__(f"t={t!r} is outside the valid interval [{start!r}, {end!r}]")
        self.t = t
        self.start = start
        self.end = end


class DegenerateTangentError(InputDataError):
    """No forward direction can be determined at the requested time."""


class DuplicatePointError(InputDataError):
    """Two consecutive points coincide where a geometric construction needs distinct points."""


class EmptyOverlapError(InputDataError):
    """Two trajectories share no common time window."""

    def __init__(self, first: tuple, second: tuple):
        super().__init__(
            f"trajectories do not overlap in time: "
            f"[{first[0]!r}, {first[1]!r}] vs [{second[0]!r}, {second[1]!r}]"
        )
        self.first = first
        self.second = second


class AlignmentError(InputDataError):
    """An alignment specification cannot be built into a continuous centerline."""


class InfeasibleProfileError(InputDataError):
    """A speed profile cannot satisfy its boundary conditions."""


class MissingInputsError(InputDataError):
    """Files a command needs are absent."""

    def __init__(self, location: str, missing: List[str]):
        super().__init__(f"{location}: missing input(s): {', '.join(missing)}")
        self.missing = missing


class DareConvergenceError(TrackingError):
    """The Riccati fixed-point iteration did not converge."""

    exit_code = 4

    def __init__(self, message: str, residual_history: Optional[List[float]] = None):
        super().__init__(message)
        self.residual_history = residual_history or []


class DivergenceError(TrackingError):
    """The closed loop left the tracking envelope."""

    exit_code = 4

    def __init__(self, message: str, dump: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.dump = dump or {}
