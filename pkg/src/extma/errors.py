"""Exception types shared across the package."""


class DomainError(ValueError):
    """An evaluation point or parameter lies outside the admissible domain."""


class ConvergenceError(RuntimeError):
    """Newton iteration stagnated before reaching the residual tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class ConvexityError(RuntimeError):
    """The discrete Hessian lost positive definiteness during iteration."""


class FitError(RuntimeError):
    """The expansion fit is ill-posed (conditioning or sampling problems)."""


class ConfigError(ValueError):
    """A run configuration is malformed or violates a module precondition."""
