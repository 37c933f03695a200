from __future__ import annotations

import typing

__all__ = [
    "AlphaRangeError",
    "ConfigurationError",
    "FitError",
    "FitUndefinedError",
    "HilbertSpaceSizeError",
    "IntegrationError",
    "NormalizationError",
    "NumericalError",
    "PhysicsError",
    "ResonanceError",
    "SimulationError",
    "SolverConvergenceError",
    "UnstableChainError",
]


class SimulationError(RuntimeError):
    """Base class for every error raised by xychain.

    `exit_code` is the process exit status the CLI uses when the error escapes
    an experiment. `context` optionally names the operation that failed.
    """

    exit_code: typing.ClassVar[int] = 1

    def __init__(self, message: str, *, context: str | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        if self.context:
            return f"{self.context}: {self.message}"
        return self.message


class ConfigurationError(SimulationError, ValueError):
    """An input violates a documented constraint."""

    exit_code = 2


class HilbertSpaceSizeError(ConfigurationError):
    """The requested state space exceeds a configured size cap."""


class PhysicsError(SimulationError):
    exit_code = 3


class UnstableChainError(PhysicsError):
    def __init__(self, message: str, *, anisotropy: float, **kwargs) -> None:
        super().__init__(message, **kwargs)
        self.anisotropy = anisotropy


class ResonanceError(PhysicsError):
    def __init__(self, message: str, *, mode: int, gap: float, **kwargs) -> None:
        super().__init__(message, **kwargs)
        self.mode = mode
        self.gap = gap


class FitUndefinedError(PhysicsError):
    def __init__(self, message: str, *, sign_pattern: str, **kwargs) -> None:
        super().__init__(message, **kwargs)
        self.sign_pattern = sign_pattern


class AlphaRangeError(PhysicsError):
    def __init__(
        self, message: str, *, alpha_min: float, alpha_max: float, **kwargs
    ) -> None:
        super().__init__(message, **kwargs)
        self.alpha_min = alpha_min
        self.alpha_max = alpha_max


class NumericalError(SimulationError):
    exit_code = 4


class SolverConvergenceError(NumericalError):
    def __init__(self, message: str, *, residual: float, **kwargs) -> None:
        super().__init__(message, **kwargs)
        self.residual = residual


class IntegrationError(NumericalError):
    def __init__(self, message: str, *, achieved: float, **kwargs) -> None:
        super().__init__(message, **kwargs)
        self.achieved = achieved


class FitError(NumericalError):
    """Least-squares design matrix is rank deficient."""


class NormalizationError(NumericalError):
    """Probabilities that must sum to one do not."""
