class GapStrandError(Exception):
    """Base class for package errors."""


class GeometryError(GapStrandError, ValueError):
    pass


class ConfigError(GapStrandError, ValueError):
    pass


class ConvergenceError(GapStrandError, RuntimeError):
    """A nonlinear or linear solve failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual


class SolverDivergence(GapStrandError, FloatingPointError):
    """The time stepper produced non-finite or out-of-range potentials.

    ``snapshot`` carries whatever diagnostic state was available when the
    run was aborted.
    """

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot


class InexcitableError(GapStrandError):
    """No stimulus in the calibration bracket produced propagation."""
