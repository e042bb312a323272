"""Exception hierarchy shared by every module of the package."""


class LandscapeError(Exception):
    """Base class for all errors raised by landscape_lab."""


class InvalidState(LandscapeError, ValueError):
    """A matrix or vector fails the membership test of its state space.

    ``violation`` holds the measured magnitude of the broken invariant.
    """

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class NotHermitian(InvalidState):
    pass


class NotPositive(InvalidState):
    pass


class TraceNotOne(InvalidState):
    pass


class InvalidDistribution(InvalidState):
    pass


class NonHermitianObservable(LandscapeError, ValueError):
    pass


class DimensionMismatch(LandscapeError, ValueError):
    pass


class SpaceMismatch(LandscapeError, ValueError):
    pass


class LambdaOutOfRange(LandscapeError, ValueError):
    pass


class NonRealResult(LandscapeError, ValueError):
    pass


class RankDeficientInput(LandscapeError, ValueError):
    pass


class IntegrationFailure(LandscapeError, RuntimeError):
    pass


class EvaluationFailure(LandscapeError, RuntimeError):
    pass


class SingularState(LandscapeError, ValueError):
    pass


class RegimeMismatch(LandscapeError, ValueError):
    pass


class NotCritical(LandscapeError):
    """Raised when a point is not critical; ``report`` carries the partial result."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotSameLevel(LandscapeError, ValueError):
    pass


class NotLinearObjective(LandscapeError, ValueError):
    pass


class ConfigInvalid(LandscapeError, ValueError):
    """Carries every validation problem as ``errors``: a list of (field_path, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))
