"""Exception and warning types shared across the package."""


class RandersSphereError(Exception):
    """Base class for all library errors."""


class DomainError(RandersSphereError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleCrossing(DomainError):
    """A point or trajectory entered the guard band around a pole."""


class NonConvexError(RandersSphereError):
    """Navigation data or a Randers form fails the strict convexity bound."""


class UnsupportedFamily(RandersSphereError):
    """The requested operation has no formula for this profile family."""


class PreconditionFailed(RandersSphereError):
    """A structural hypothesis (Killing / closedness) does not hold.

    ``failures`` maps a condition label to a short description of where it
    failed.
    """

    def __init__(self, failures):
        self.failures = dict(failures)
        msg = "; ".join(f"{k}: {v}" for k, v in self.failures.items())
        super().__init__(f"precondition failed: {msg}")


class ConfigError(RandersSphereError):
    """Invalid run configuration."""


class FanTooCoarse(UserWarning):
    """Adjacent cut-point candidates are too far apart for the fan resolution."""
