"""Exception hierarchy shared by the samplers, verifiers and the solver."""


class NsfdeError(Exception):
    """Base class for all library errors."""


class DomainError(NsfdeError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ContractError(NsfdeError, ValueError):
    """Inputs are individually valid but mutually inconsistent (shapes, grids)."""


class NumericError(NsfdeError, ArithmeticError):
    """A numerical procedure failed (factorization, quadrature refinement)."""


class ContractionError(NumericError):
    """The neutral inner fixed-point loop did not converge."""

    def __init__(self, message, measured_rate=None):
        super().__init__(message)
        self.measured_rate = measured_rate


class ConvergenceError(NumericError):
    """Picard iteration exhausted its budget; ``report`` holds the diagnostics."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class HypothesisError(NsfdeError):
    """The solver refused a scenario whose hypothesis check failed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

    @property
    def violated(self):
        if self.report is None:
            return []
        return [row.name for row in self.report.rows if not row.passed]
