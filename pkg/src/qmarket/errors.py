"""Exception and warning types shared across the package."""


class QMarketError(Exception):
    """Base class for all package errors."""


class NonHermitianError(QMarketError, ValueError):
    """Raised when a matrix that must be Hermitian is not.

    ``pair`` holds the 1-based (row, column) indices of the worst offending
    entry pair and ``deviation`` the size of the mismatch.
    """

    def __init__(self, pair, deviation):
        self.pair = pair
        self.deviation = deviation
        i, j = pair
        super().__init__(
            f"matrix is not Hermitian: |M[{i},{j}] - conj(M[{j},{i}])| = {deviation:.3e}"
        )


class DimensionError(QMarketError, ValueError):
    pass


class InvalidStateError(QMarketError, ValueError):
    """A matrix failed the density-matrix checks (Hermitian, unit trace, PSD)."""


class ConsistencyError(QMarketError, RuntimeError):
    """Two independent computations of the same quantity disagree."""


class UndefinedMetricError(QMarketError, ArithmeticError):
    pass


class UnsupportedCaseError(QMarketError, NotImplementedError):
    pass


class HealthCheckError(QMarketError, RuntimeError):
    """A simulation drifted outside its trace/Hermiticity budget."""

    def __init__(self, message, step):
        self.step = step
        super().__init__(f"step {step}: {message}")


class ConfigError(QMarketError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class CompletePositivityWarning(UserWarning):
    """Coefficients fail the complete-positivity inequality."""


class PositivityWarning(UserWarning):
    """A state has an eigenvalue noticeably below zero."""
