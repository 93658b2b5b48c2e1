"""Exception and warning types shared across the toolkit.

The classes split failures into two families so callers (notably the CLI)
can map them onto exit codes: schema/input problems versus domain problems
such as empty results or degenerate fits.
"""


class QacalibError(Exception):
    """Base class for all toolkit-specific failures."""


class SchemaError(QacalibError):
    """A log line or document violates the expected schema."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = f"line {line}: " if line is not None else ""
        suffix = f" (field: {field})" if field else ""
        super().__init__(f"{prefix}{message}{suffix}")


class KindMismatchError(SchemaError):
    """A record's model kind differs from what the caller expected."""


class EmptyInputError(QacalibError):
    """An operation received no records to work on."""


class NoValidSpanError(QacalibError):
    """No context span satisfies the extraction constraints."""


class FitError(QacalibError):
    """Temperature fitting could not produce a usable optimum."""


class CorpusError(QacalibError):
    """A manifest request cannot be satisfied by the given corpus."""


class CorrelationError(QacalibError):
    """A correlation is undefined for the given inputs."""


class LogWarning(UserWarning):
    """Non-fatal oddity in a prediction log; the record is kept."""


class FitWarning(UserWarning):
    """A fitted temperature looks degenerate (e.g. pinned to a bound)."""
