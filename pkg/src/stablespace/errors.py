"""Exception hierarchy.

Errors split into two families so the CLI can map them onto exit codes:
``DataError`` for bad or degenerate input, ``NumericalError`` for failures of
the numerical routines themselves.
"""


class StableSpaceError(Exception):
    """Base class for all package errors."""


class DataError(StableSpaceError, ValueError):
    """Input data violates a precondition."""


class NumericalError(StableSpaceError, ArithmeticError):
    """A numerical routine failed or hit a degenerate configuration."""


class NonFiniteValues(DataError):
    pass


class DuplicateNames(DataError):
    pass


class ZeroVarianceColumn(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} has zero sample variance")
        self.name = name


class TooShort(DataError):
    pass


class PeriodTooLarge(DataError):
    pass


class ConstantSeries(DataError):
    pass


class DegenerateVariance(NumericalError):
    pass


class ZeroCrossCovariance(NumericalError):
    pass


class RankExhausted(NumericalError):
    def __init__(self, index, completed=None):
        super().__init__(
            f"residual cross-covariance vanished at component {index}"
        )
        self.index = index
        self.completed = completed


class EigenFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class AllZeroComponent(NumericalError):
    def __init__(self, component):
        super().__init__(f"penalty annihilates loading of component {component}")
        self.component = component


class InsufficientSample(DataError):
    pass


class SingularMoments(NumericalError):
    pass


class MissingCriticalValue(DataError):
    def __init__(self, dimension):
        super().__init__(f"no trace critical value for n - r0 = {dimension}")
        self.dimension = dimension


class DimensionTooLarge(DataError):
    pass


class DegreesOfFreedomTooSmall(DataError):
    pass


class OverlappingIndexSets(DataError):
    pass


class RankDeficient(DataError):
    pass


class RankDeficientScores(DataError):
    pass


class ZeroVariance(DataError):
    pass


class FewerThanKStableScores(DataError):
    def __init__(self, requested, available):
        super().__init__(
            f"requested {requested} stable scores but only {available} available"
        )
        self.requested = requested
        self.available = available
