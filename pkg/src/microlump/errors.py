"""Exception types shared across the package."""


class MicrolumpError(Exception):
    """Base class for all errors raised by microlump."""


class DocumentParseError(MicrolumpError):
    """A model/partition/generator document is syntactically malformed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MicrolumpError):
    """An invariant of a model or derived object is violated."""


class CapExceededError(MicrolumpError):
    """The state space is larger than the enumeration cap allows."""


class NotLumpableError(MicrolumpError):
    """A partition failed the lumpability test; carries the witness."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"partition is not lumpable: {witness}")


class AnalysisError(MicrolumpError):
    """A chain does not meet the preconditions of an analysis, or a solve
    failed its residual check."""
