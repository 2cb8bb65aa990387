"""Exception types shared across the package."""


class HacError(Exception):
    """Base class for all package errors."""


class DomainError(HacError, ValueError):
    """A parameter or family lies outside the domain of an operation."""


class TauRangeError(DomainError):
    """A Kendall's tau value cannot be produced by the requested family."""


class UnsupportedSampler(HacError):
    """No sampling route is available for the requested model."""


class DataError(HacError, ValueError):
    """Input data is malformed."""


class EstimationError(HacError):
    """A numerical estimation step could not produce a finite result."""
