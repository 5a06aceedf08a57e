"""Exception types shared across the package.

Plain ``ValueError`` is used for invalid arguments (bad ranges, length
mismatches); the classes below mark conditions that depend on the *data*
rather than on how a function was called, so callers can react to them
separately (the CLI maps them to distinct exit codes).
"""


class RoomEchoError(Exception):
    """Base class for data-dependent failures."""


class InsufficientDataError(RoomEchoError):
    """A recording or dataset is too short for the requested operation."""


class TimeAliasingError(RoomEchoError):
    """The impulse response does not fit inside one excitation period."""


class DegenerateSignalError(RoomEchoError):
    """A signal has no usable variation (all zeros, constant, ...)."""


class InsufficientDecayError(RoomEchoError):
    """The energy decay curve does not expose the span an estimator needs."""


class NoCrossingError(RoomEchoError):
    """The decay never meets the pseudo-noise curve within the window."""


class SaturationError(RoomEchoError):
    """An energy ratio sits on a boundary where its dB form is infinite."""


class DatasetFormatError(RoomEchoError):
    """A corpus file violates the expected schema."""
