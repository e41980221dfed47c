"""Exception hierarchy shared across the package."""


class SlitwaveError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SlitwaveError):
    """Invalid configuration (bad grid, schedule, geometry, config file)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class UsageError(SlitwaveError):
    """An operation was called with inputs violating its contract."""


class ResolutionError(SlitwaveError):
    """A sampled object is not resolvable on the requested lattice."""


class NumericalError(SlitwaveError):
    """A run produced non-finite values or failed a hard numerical check."""
