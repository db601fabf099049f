"""Exception hierarchy shared by all falsecall modules."""


class FalseCallError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FalseCallError):
    """Invalid arguments, shapes, or values supplied by the caller."""


class IngestionError(InputError):
    """A file (CSV data, score export, config) could not be parsed."""


class UndefinedRateError(InputError):
    """A rate whose denominator class is absent (no positives / no negatives)."""


class DegenerateDataError(InputError):
    """Data without enough structure for the requested operation."""


class StateError(FalseCallError):
    """An object was used before reaching the required state."""
