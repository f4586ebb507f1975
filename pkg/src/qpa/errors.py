"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of the operation."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to reach its target accuracy.

    ``best`` carries the best value attained before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class PostSelectionError(NumericError):
    """The post-selected branch has (numerically) zero probability."""
