"""Exception hierarchy shared by all modules."""


class RandcertError(Exception):
    """Base class for errors raised by randcert."""


class ValidationError(RandcertError, ValueError):
    """An argument is outside the domain of the operation."""


class DimensionError(ValidationError):
    """Two objects that must share a dimension do not."""


class CapabilityError(RandcertError):
    """The request is well-formed but not supported by this implementation.

    Raised for instance when exact evaluation is asked for a classifier/noise
    combination without a closed form, or when exhaustive covering is asked
    for too many points.
    """
