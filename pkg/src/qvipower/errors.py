"""Exception types raised by the solver library."""


class QviPowerError(Exception):
    """Base class for all library errors."""


class InvalidInstance(QviPowerError, ValueError):
    """A game instance violates one of its invariants.

    The offending field name is kept in ``field`` so callers (the CLI in
    particular) can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class DegenerateChannel(InvalidInstance):
    """Every direct subchannel gain of some player is zero."""


class InvalidLevel(QviPowerError, ValueError):
    """A waterfilling level that is not strictly positive."""


class EmptySupport(QviPowerError, ValueError):
    """No subchannel can carry power (all effective noise is infinite)."""


class InvalidPrice(QviPowerError, ValueError):
    """A negative price, or a nonzero price on a rate-maximizing player."""


class NonConvergence(QviPowerError, RuntimeError):
    """An iterative method hit its iteration cap."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class InvalidSpec(InvalidInstance):
    """An experiment specification violates one of its invariants."""
