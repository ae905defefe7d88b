"""Exception hierarchy.

Everything a user can trigger with bad input derives from :class:`InputError`
(CLI exit code 1). :class:`ConsistencyError` flags a pipeline bug (exit 2).
"""


class OxiApneaError(Exception):
    """Base class for all package errors."""


class InputError(OxiApneaError, ValueError):
    """Bad or unusable input data."""


class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TimeAxisError(InputError):
    """Timestamps cannot be turned into a strictly increasing axis."""


class NoValidSamplesError(InputError):
    pass


class GapError(InputError):
    """A dropout is longer than the configured repair limit."""

    def __init__(self, start_s, end_s, max_gap_s):
        self.start_s = float(start_s)
        self.end_s = float(end_s)
        self.max_gap_s = float(max_gap_s)
        super().__init__(
            f"unrepairable gap: {self.start_s:.3f}s-{self.end_s:.3f}s "
            f"exceeds max_gap_s={self.max_gap_s:g}"
        )


class SignalTooShortError(InputError):
    pass


class FlatSignalError(InputError):
    def __init__(self, message="flat signal: no gradient states"):
        super().__init__(message)


class InsufficientDataError(InputError):
    def __init__(self, message="insufficient data"):
        super().__init__(message)


class ConsistencyError(OxiApneaError, RuntimeError):
    """Internal cross-reference check failed; indicates a bug, not bad input."""
