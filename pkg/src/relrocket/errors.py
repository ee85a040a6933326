"""Exception hierarchy."""


class RocketError(Exception):
    """Base class for all package errors."""


class DomainError(RocketError, ValueError):
    """An argument lies outside the domain of the operation."""


class SpeedLimitError(DomainError):
    """A velocity at or beyond the light-speed guard was supplied."""


class UnreachableStateError(SpeedLimitError):
    """A steering endpoint is not relativistically reachable (|v| >= c)."""


class UncontrollableError(DomainError):
    """The input matrix vanishes, so no gain can place the poles."""


class MassDepletedError(DomainError):
    """The rocket mass fell to or below the dry-mass floor."""


class ConfigError(RocketError, ValueError):
    """A scenario document is malformed or violates an invariant.

    ``location`` names the offending field (dotted path) or the
    ``line:column`` of a syntax error.
    """

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
