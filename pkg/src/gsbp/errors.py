"""Exception types shared across the package."""

from __future__ import annotations


class GsbpError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GsbpError):
    """A point lies outside the domain of a metric, potential or transform."""


class NotAnEdgeError(GsbpError):
    """A vertex pair was used as an edge but is not one."""


class GraphError(GsbpError):
    """Invalid graph data (duplicate edges, self loops, disconnected, ...)."""


class HomogeneityError(GsbpError):
    """Homogeneity metadata is missing or a homogeneity precondition failed."""


class StepFailureError(GsbpError):
    """The implicit-midpoint inner solve did not converge at some step."""

    def __init__(self, step_index: int, residual: float):
        self.step_index = step_index
        self.residual = residual
        super().__init__(
            f"midpoint solve diverged at step {step_index} (residual {residual:.3e})"
        )


class DomainExitError(GsbpError):
    """The integrated state left the admissible domain."""

    def __init__(self, time: float, detail: str = ""):
        self.time = time
        msg = f"state left the domain at t={time:.6g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ShootingError(GsbpError):
    """The boundary-value shooting iteration did not converge."""

    def __init__(self, best_residual: float, best_p0, iterations: int):
        self.best_residual = best_residual
        self.best_p0 = best_p0
        self.iterations = iterations
        super().__init__(
            f"shooting did not converge after {iterations} iterations "
            f"(best terminal residual {best_residual:.3e})"
        )


class UnsupportedOperationError(GsbpError):
    """The operation is not available for this metric kind."""


class ConfigError(GsbpError):
    """An experiment configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
