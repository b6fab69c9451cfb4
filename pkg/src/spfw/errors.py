"""Exception types shared across the package."""


class SpfwError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(SpfwError, ValueError):
    """An argument has the wrong shape, sign, or contains non-finite values."""


class UnsupportedError(SpfwError, NotImplementedError):
    """The requested capability is not available for this domain or objective."""


class CapacityError(SpfwError):
    """An enumeration or grid would exceed its configured size cap."""


class InvariantViolationError(SpfwError):
    """Internal bookkeeping drifted beyond its tolerance."""


class NumericalFailureError(SpfwError):
    """A non-finite value appeared during a solver run.

    The partial trace collected before the failure is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
