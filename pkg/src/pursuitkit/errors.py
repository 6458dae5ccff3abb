"""Exception types shared across the package."""


class PursuitError(Exception):
    """Base class for all pursuitkit errors."""


class InvalidSampleError(PursuitError):
    """A gaze or target coordinate was NaN or infinite."""


class OrderingError(PursuitError):
    """A sample timestamp was not strictly greater than its predecessor."""


class LayoutMismatchError(PursuitError):
    """The set of target ids in a frame does not match the configured layout."""


class ScenarioFormatError(PursuitError):
    """A scenario, config, or gaze-log file could not be parsed or validated."""
