"""Error types shared across the package."""

from __future__ import annotations


class NumericalError(RuntimeError):
    """A numerical procedure failed (factorization, quadrature, ...)."""


class ConvergenceError(NumericalError):
    """An iteration hit its cap before meeting tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SpecValidationError(ValueError):
    """An experiment spec is invalid; carries every violation found."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid experiment spec:\n  " + "\n  ".join(errors))
        self.errors = errors
