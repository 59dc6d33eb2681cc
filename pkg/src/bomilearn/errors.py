"""Exception and warning types raised across the package."""


class BomiError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BomiError, ValueError):
    pass


class DegenerateData(BomiError, ValueError):
    pass


class RankDeficient(BomiError, ValueError):
    pass


class InvalidConfig(BomiError, ValueError):
    pass


class ZeroTrueMapping(BomiError, ValueError):
    pass


class WindowTooLong(BomiError, ValueError):
    pass


class EmptyGroup(BomiError, ValueError):
    pass


class SchemaVersionMismatch(BomiError, ValueError):
    pass


class FitDiverged(BomiError, RuntimeError):
    pass


class Diverged(BomiError, RuntimeError):
    """A simulated state left the configured magnitude bound.

    ``records`` holds whatever trials completed before the blow-up, so callers
    running a long protocol can keep the partial results.
    """

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = list(records) if records is not None else []


class NonDecreasingSeries(UserWarning):
    """The fitted exponential does not decay; the rate estimate is meaningless."""


class TimescaleOrderingWarning(UserWarning):
    """Parameters violate k_p << eta << gamma or a >> k_p."""
