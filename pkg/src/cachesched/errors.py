"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid input parameters or malformed in-memory data."""


class ParseError(ValueError):
    """A serialized document could not be turned into a valid object."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


class SolverError(RuntimeError):
    """Numerical or algorithmic failure inside a solver."""


class ConvergenceError(SolverError):
    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


class ContractError(RuntimeError):
    """An operation was called outside of its precondition."""
