"""Exception hierarchy shared by the analytic engines, the simulator and the CLI."""


class GluepollError(Exception):
    """Base class for all package errors."""


class DomainError(GluepollError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class InstabilityError(GluepollError):
    """The model has total load >= 1, so no steady state exists."""

    def __init__(self, rho_total: float, message: str = ""):
        self.rho_total = rho_total
        super().__init__(message or f"unstable model: sum of rho_i = {rho_total:.6g} >= 1")


class NumericalError(GluepollError, ArithmeticError):
    """An iterative or quadrature routine failed to meet its tolerance."""
