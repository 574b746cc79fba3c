class BasinMapError(Exception):
    """Base class for every error raised by basinmap."""


class StepError(BasinMapError, ArithmeticError):
    """A single application of an iteration map could not be completed."""


class SingularDenominator(StepError):
    pass


class NonFiniteStep(StepError):
    """The step overflowed to inf or produced nan."""


class PoleAtDerivativeZero(StepError):
    """A derivative entering a logarithmic derivative or fractional power vanished."""


class NoConvergence(BasinMapError):
    """The simultaneous root finder did not settle within its iteration cap."""


class MergedRoots(NoConvergence):
    """Two computed roots coincide, so the polynomial has a multiple root."""


class OrderEstimationError(BasinMapError):
    pass


class OrbitDiverged(OrderEstimationError):
    pass


class InsufficientSamples(OrderEstimationError):
    pass
