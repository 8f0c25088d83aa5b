"""Exception types shared across the package."""


class SketchError(Exception):
    """Base class for failures raised by this package."""


class NumericalError(SketchError):
    """Non-finite intermediate values or an iteration that failed to converge."""


class RetryLimitExceeded(NumericalError):
    """BoostedSparseShrink rejected every attempt up to its retry cap."""


class ConvergenceError(NumericalError):
    pass
