"""
Runtime failures raised by the numerical code.

Precondition violations use django.core.exceptions.ValidationError instead.
"""


class SolverError(Exception):
    """Base class for numerical failures surfaced with a non-zero exit."""


class StabilityError(SolverError):
    """The explicit coagulation substep would exceed the stability limit."""

    def __init__(self, c_max, dt, limit):
        self.c_max = c_max
        self.dt = dt
        self.suggested_dt = limit / c_max if c_max > 0 else dt
        super().__init__(
            f"Stability limit violated: c_max={c_max:.6e} with dt={dt:.6e} "
            f"(c_max*dt={c_max * dt:.3f} > {limit}); try dt <= {self.suggested_dt:.6e}"
        )


class ConvergenceError(SolverError):
    """Picard iteration of the one-step mild map did not converge."""


class BlowUpError(SolverError):
    """A reference concentration exceeded the blow-up guard."""


class AdmissibilityError(SolverError):
    """The model failed a mandatory structural check and no override was given."""

    def __init__(self, report):
        self.report = report
        failed = ", ".join(report.failed_mandatory()) or "unknown"
        super().__init__(f"Model is not admissible ({failed}); pass force to override")


class HistoryLimitError(SolverError):
    """Storing the requested run history would exceed the configured limit."""
