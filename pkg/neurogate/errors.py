"""
Exception types for neurogate.

Input errors derive from both NeurogateError and ValueError, so callers
that only catch ValueError keep working. The CLI maps NeurogateError to the
input-error exit code and anything else to the internal-error exit code.
"""

from typing import Optional


class NeurogateError(Exception):
    """Base class for all neurogate errors."""


class SignalError(NeurogateError, ValueError):
    """Invalid EEG input or signal-processing parameters."""


class PosteriorError(NeurogateError, ValueError):
    """Posterior is not a valid point on the action simplex."""


class ConfigError(NeurogateError, ValueError):
    """Configuration value out of range or inconsistent."""


class GroundingError(NeurogateError, ValueError):
    """Intent cannot be grounded to a goal with the given task context."""


class PlanningError(NeurogateError, ValueError):
    """Action applied in a state where it is not applicable."""


class PddlParseError(NeurogateError, ValueError):
    """PDDL text uses an unsupported construct or is malformed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class InputFileError(NeurogateError, ValueError):
    """Malformed input file; carries the path and offending line."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = path or '<input>'
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


class TraceFormatError(InputFileError):
    """Trace file header or record cannot be decoded."""
