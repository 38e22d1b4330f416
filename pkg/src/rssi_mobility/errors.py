"""Exception hierarchy shared by every module in the package."""


class RssiMobilityError(ValueError):
    """Base class for all domain errors raised by this package."""


class EmptyTrace(RssiMobilityError):
    pass


class ZeroVariance(RssiMobilityError):
    pass


class InsufficientSamples(RssiMobilityError):
    pass


class TooFewPoints(RssiMobilityError):
    pass


class DegenerateX(RssiMobilityError):
    pass


class LengthMismatch(RssiMobilityError):
    pass


class ZeroVarianceResponse(RssiMobilityError):
    pass


class InsufficientLags(RssiMobilityError):
    pass


class ZeroSlope(RssiMobilityError):
    pass


class ZeroTruth(RssiMobilityError):
    pass


class ConfigInvalid(RssiMobilityError):
    """Raised for an invalid simulation or CLI configuration.

    ``field`` names the offending configuration key.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NonConvergenceWarning(RuntimeWarning):
    """Emitted when an iterative fit stops at its iteration cap."""
