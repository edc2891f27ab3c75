"""Errors raised by the design library. ``exit_code`` is what the CLI returns."""


class DesignError(Exception):
    exit_code = 1


class InvalidInstance(DesignError):
    """Malformed instance data: shapes, budget, weights."""
    exit_code = 2


class NegativeWeight(InvalidInstance):
    pass


class ZeroSum(InvalidInstance):
    pass


class Infeasible(DesignError):
    """The vectors cannot support the requested objective (e.g. they do not span)."""
    exit_code = 3


class GuaranteeViolated(DesignError):
    """A sandwiching step or a certified bound failed; signals a numerical or logic bug."""
    exit_code = 4


class RankDeficient(DesignError):
    exit_code = 5


class NumericalFailure(DesignError):
    pass


class SingularMatrix(NumericalFailure):
    pass


class NotDivisible(NumericalFailure):
    pass


class IterationLimit(DesignError):
    """Raised by strict solves; ``solution`` holds the best feasible iterate."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class DegreeMismatch(DesignError):
    pass


class WeightSumError(DesignError):
    pass


class TooLarge(DesignError):
    """Leaf enumeration over the configured limit."""
    exit_code = 2


class ZeroProbability(DesignError):
    pass
