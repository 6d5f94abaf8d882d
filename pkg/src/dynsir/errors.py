"""Exception hierarchy shared across the package."""


class DynsirError(Exception):
    """Base class for all package-specific failures."""


class NumericalError(DynsirError):
    """A solver or iteration failed to converge, or a numeric invariant broke."""


class ConditioningError(DynsirError):
    """Outbreak conditioning exhausted its restart budget.

    Attributes:
        discards: number of sub-threshold runs thrown away before giving up.
    """

    def __init__(self, message: str, discards: int):
        super().__init__(message)
        self.discards = discards


class AlignmentError(DynsirError):
    """A trajectory never reached the pinning level, so it cannot be aligned."""


class ConfigError(DynsirError):
    """A run configuration file is missing keys, ill-typed, or inconsistent."""
