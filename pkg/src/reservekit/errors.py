"""Exception hierarchy shared across the package.

Every exception carries a short ``category`` slug used by the CLI to emit
machine-parseable error lines (``error[<category>]: <message>``) and to map
failures onto exit codes.
"""


class ReserveSizingError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class SchemaError(ReserveSizingError):
    """A CSV file does not have the expected header/columns."""

    category = "schema"


class RecordValidationError(ReserveSizingError):
    """A single record failed validation (message names the row)."""

    category = "validation"


class OrderingError(ReserveSizingError):
    """Timestamps are not strictly increasing."""

    category = "ordering"


class DataQualityError(ReserveSizingError):
    """A day (or other window) is missing too much data to be usable."""

    category = "data-quality"


class DataInconsistencyError(ReserveSizingError):
    """Derived quantities contradict each other (e.g. an outage rate > 1)."""

    category = "inconsistent-data"


class InsufficientDataError(ReserveSizingError):
    """Not enough samples/records to perform the requested computation."""

    category = "insufficient-data"


class ParameterError(ReserveSizingError):
    """An argument is outside its documented domain."""

    category = "parameter"


class GridIncompatibilityError(ReserveSizingError):
    """Two discrete distributions do not share a common MW lattice."""

    category = "grid"


class ConfigurationError(ReserveSizingError):
    """The run configuration is incomplete or self-contradictory."""

    category = "config"


class NoOverlapError(ReserveSizingError):
    """Two series share no usable overlapping time span."""

    category = "no-overlap"
