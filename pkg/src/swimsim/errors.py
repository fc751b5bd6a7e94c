class ParameterError(ValueError):
    """Invalid model or run parameter."""


class TraceFormatError(ValueError):
    """Malformed trace file; carries the offending line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ValidationError(ValueError):
    """Well-formed input that violates a trace invariant."""
