"""Exception hierarchy for ccrlab."""


class CCRLabError(Exception):
    """Base class for all errors raised by ccrlab."""


# cones and lattices
class NotSpanning(CCRLabError):
    pass


class NotPointed(CCRLabError):
    pass


class DimensionTooLarge(CCRLabError):
    pass


class EmptyInterior(CCRLabError):
    pass


class NotInteriorFunctional(CCRLabError):
    pass


class FunctionalNotOrthogonal(CCRLabError):
    pass


class RankMismatch(CCRLabError):
    pass


# P-spaces
class ChartMismatch(CCRLabError):
    pass


class NotInCone(CCRLabError):
    pass


class LadderTooShort(CCRLabError):
    pass


class DegenerateChart(CCRLabError):
    """Membership cannot be decided: the slab is unbounded and rank(N) > 1."""


# shift representations
class InfiniteMultiplicity(CCRLabError):
    pass


class WindowChartMismatch(CCRLabError):
    pass


class SampleOffGrid(CCRLabError):
    pass


class UnsafeShift(CCRLabError):
    pass


class Unstable(CCRLabError):
    """A truncation-sensitive quantity did not stabilise across a window ladder."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


# Fock space
class TruncationGuard(CCRLabError):
    pass


# index
class UnsafeInteriorPoint(CCRLabError):
    pass


class NotConditionallyPSD(CCRLabError):
    pass


# classification
class LatticeNotOrthogonal(CCRLabError):
    pass


class RankWarning(UserWarning):
    pass


class IrrationalInput(CCRLabError):
    pass


class IncomparableScenarios(CCRLabError):
    pass


class ZeroDirection(CCRLabError):
    pass


# cli
class ParseError(CCRLabError):
    pass


class CheckFailure(CCRLabError):
    pass
