"""Exception hierarchy shared by all modules."""


class SanMarginalError(Exception):
    """Base class for errors raised by this package."""


class InvalidModel(SanMarginalError, ValueError):
    """A SAN model violates one of its structural assumptions.

    ``violations`` holds one human-readable line per problem.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid model")


class InvalidParams(SanMarginalError, ValueError):
    pass


class InvalidPermutation(SanMarginalError, ValueError):
    pass


class InvalidConfig(SanMarginalError, ValueError):
    pass


class InvalidGamma(SanMarginalError, ValueError):
    pass


class CapExceeded(SanMarginalError, MemoryError):
    pass


class SingularSystem(SanMarginalError, ArithmeticError):
    pass


class DimMismatch(SanMarginalError, ValueError):
    pass


class TreeMismatch(SanMarginalError, ValueError):
    pass


class EmptyModeSet(SanMarginalError, ValueError):
    pass


class IndexOutOfRange(SanMarginalError, IndexError):
    pass


class NotConverged(SanMarginalError, RuntimeError):
    """Raised only on request; the solver normally reports failure in-band."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
