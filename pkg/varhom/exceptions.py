class HomogenizationError(Exception):
    pass


class InvalidInput(HomogenizationError, ValueError):
    """Rejected input: wrong shapes, broken symmetry, non-positive constants."""

    pass


class EnlargeDomain(HomogenizationError):
    """A maximizer landed on the boundary of its search box."""

    pass


class OutOfDomain(HomogenizationError):
    """A query left the region covered by a tabulated integrand."""

    pass


class SolverFailure(HomogenizationError):
    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class UnsupportedDimension(HomogenizationError):
    pass


class ConfigError(HomogenizationError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


class InsufficientSamples(HomogenizationError):
    pass


class FitRefused(HomogenizationError):
    pass
