"""
Exception hierarchy for the Lagrangian stress lab.
The CLI maps each family onto an exit status.
"""


class LabError(Exception):
    """Base class for every error raised by this project."""

    exit_status = 1


class ConfigError(LabError):
    """Run configuration could not be parsed or validated."""

    exit_status = 2


class NonConvergenceError(LabError):
    """Picard iteration hit max_iter; carries the convergence history."""

    exit_status = 3

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history or [])


class InvariantViolation(LabError):
    """An iterate left the invariant set (names the offending frame)."""

    exit_status = 4

    def __init__(self, message: str, frame: int | None = None):
        super().__init__(message)
        self.frame = frame


class InvertibilityError(InvariantViolation):
    """Flow map inversion did not converge."""


class GrowthError(LabError):
    """Non-finite values appeared during time integration."""

    exit_status = 4

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class NonFiniteError(ValueError):
    """Field samples contain NaN or inf."""


class RankMismatchError(ValueError):
    """Tensor rank or shape does not match what the operation expects."""


class GridMismatchError(ValueError):
    """Operands live on different spatial or time grids."""
