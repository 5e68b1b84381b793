"""Exception types shared across the solver and diagnostics."""


class NSVError(Exception):
    """Base class for all package errors."""


class GridTooSmall(NSVError):
    """Raised when a physical-space grid cannot hold the requested modes."""

    def __init__(self, grid_size: int, required: int, what: str = "synthesis"):
        self.grid_size = grid_size
        self.required = required
        super().__init__(
            f"grid of {grid_size} points per dimension is too small for "
            f"{what}; need at least {required}"
        )


class NonlinearSolveFailed(NSVError):
    """Picard iteration did not reach the requested residual."""

    def __init__(self, iterations: int, residual: float, step: int | None = None):
        self.iterations = iterations
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at step {step}"
        super().__init__(
            f"fixed-point solve{where} stopped after {iterations} iterations "
            f"with residual {residual:.3e}; reduce the time step (increase M)"
        )


class ScheduleViolation(NSVError):
    """A sweep schedule does not drive n * alpha^3 monotonically to zero."""


class QuadratureUnresolved(NSVError):
    """Grid quadrature of a fractional-power integrand failed its self-check."""

    def __init__(self, value: float, change: float, grid_size: int):
        self.value = value
        self.change = change
        self.grid_size = grid_size
        super().__init__(
            f"L^p quadrature not converged at N={grid_size}: doubling the grid "
            f"changed the value by {change:.3e} relative"
        )


class PhiNotNonnegative(NSVError):
    """A test function failed the nonnegativity check on the sampling grid."""
