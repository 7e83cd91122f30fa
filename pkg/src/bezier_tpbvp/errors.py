"""Exception hierarchy shared by all modules."""


class BvpError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BvpError, ValueError):
    """An argument lies outside the domain of the operation."""


class DynamicsDomainError(BvpError):
    """Dynamics evaluated at an inadmissible state (e.g. the two-body singularity)."""


class TimeDegeneracyError(BvpError):
    """The Bezier time curve is not strictly increasing where it is needed."""


class IntegrationError(BvpError):
    """The initial value problem could not be integrated over the interval."""


class ShootingError(BvpError):
    """The shooting iteration failed.

    ``outcome`` holds the best iterate reached before failure, when one exists.
    """

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class ConfigError(BvpError):
    """Invalid harness configuration or case description."""
