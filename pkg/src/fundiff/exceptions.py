"""Exception hierarchy shared by all modules."""


class FundiffError(Exception):
    """Base class for package errors."""


class InvalidSpecError(FundiffError, ValueError):
    """A configuration object (basis, solver, model) is invalid."""


class InvalidArgumentError(FundiffError, ValueError):
    """An argument is outside the operation's domain."""


class RankError(FundiffError):
    """A least-squares design matrix is rank deficient."""


class InsufficientSampleError(FundiffError, ValueError):
    """Too few samples for the requested estimate."""


class NumericError(FundiffError, ArithmeticError):
    """Non-finite values were encountered."""


class GridMismatchError(FundiffError, ValueError):
    """Two objects are defined on different time grids."""


class ShapeError(FundiffError, ValueError):
    """Array dimensions do not agree."""


class DivergenceError(NumericError):
    """The solver produced a non-finite objective."""

    def __init__(self, message, iteration=None, lam=None):
        super().__init__(message)
        self.iteration = iteration
        self.lam = lam


class DegenerateTruthError(FundiffError, ValueError):
    """The true edge set is empty or complete, so ROC/AUC is undefined."""


class GenerationError(FundiffError):
    """A simulation model could not be generated."""
