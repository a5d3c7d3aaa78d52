"""Exception and warning types shared across the package."""


class MesoError(Exception):
    """Base class for all package errors."""


class EmptyCloud(MesoError):
    pass


class PackingFailed(MesoError):
    pass


class SingularPoint(MesoError):
    pass


class OutOfDomain(MesoError):
    pass


class InsideInclusion(MesoError):
    pass


class UnsupportedShape(MesoError):
    pass


class WrongAmbient(MesoError):
    pass


class SingularSystem(MesoError):
    """Raised when ``I + S D`` cannot be factorized reliably."""

    def __init__(self, message, condition_estimate=float("inf")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class IllConditioned(MesoError):
    pass


class OracleUntrusted(MesoError):
    pass


class StepTooLarge(MesoError):
    pass


class RegimeWarning(UserWarning):
    """Emitted when a computation runs outside the proven parameter regime."""
