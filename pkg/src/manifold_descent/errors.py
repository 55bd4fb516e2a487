"""Exception types shared across the package."""


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficient(SolverError):
    """The constraint gradients lost full column rank at the current point.

    Raised when the Gram matrix of constraint gradients fails a
    positive-definite factorization or its condition estimate exceeds 1e12.
    """


class NonFinite(SolverError):
    """A user-supplied callable produced NaN or Inf, or the input was not finite."""


class LineSearchFailed(SolverError):
    """Backtracking exhausted the allowed number of step reductions."""


class UnknownProblem(SolverError):
    """Requested built-in problem name is not registered."""


class SpecError(SolverError):
    """A declarative problem definition is malformed.

    The message carries the location of the offending entry, e.g.
    ``cost[2].powers``.
    """

    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")
