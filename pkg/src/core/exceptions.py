"""
Error kinds raised across the superactivation toolkit.

Every error carries a human-readable message; the CLI maps the whole family
to exit code 2 (usage / input errors).
"""


class SuperactivationError(Exception):
    """Base class for all toolkit errors."""


class InvalidDimensionError(SuperactivationError, ValueError):
    """A dimension is zero, negative, or inconsistent with the data."""


class InvalidKrausError(SuperactivationError, ValueError):
    """Kraus operators have inconsistent shapes."""


class NotTracePreservingError(SuperactivationError, ValueError):
    """Kraus completeness relation violated beyond tolerance."""


class InvalidInputError(SuperactivationError, ValueError):
    """An operator does not match the channel it is fed to."""


class InvalidCompositionError(SuperactivationError, ValueError):
    """Output dimension of the first channel differs from input of the second."""


class InvalidParameterError(SuperactivationError, ValueError):
    """A scalar parameter (probability, error, order) is out of range."""


class UnsupportedDimensionError(SuperactivationError, NotImplementedError):
    """Block isomorphism requested for a local dimension other than 2."""


class SizeLimitError(SuperactivationError):
    """A dense computation would exceed the configured size cap."""


class ConvergenceError(SuperactivationError):
    """A randomized construction could not produce a valid operator."""


class ArchiveFormatError(SuperactivationError):
    """A code archive is malformed or references missing payload."""


class CrossingNotFoundError(SuperactivationError):
    """No crossing of lower and upper bounds below the search cap."""
