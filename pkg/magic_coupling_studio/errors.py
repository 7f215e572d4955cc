from typing import Any, List, Optional


class MagicStudioError(Exception):
    """Base class for every error raised by magic_coupling_studio."""
    pass


class ConfigurationError(MagicStudioError, ValueError):
    """Raised when a configuration key or value is invalid."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(message)


class NumericalError(MagicStudioError):
    """Raised when a numerical stage cannot produce a trustworthy result."""
    pass


class ConvergenceError(NumericalError):
    """Raised when the equilibrium solver hits its iteration cap."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")


class UnstableConfigurationError(NumericalError):
    """Raised when a Hessian has a non-positive eigenvalue."""

    def __init__(self, eigenvalue: float, direction: str = "axial"):
        self.eigenvalue = eigenvalue
        self.direction = direction
        super().__init__(f"unstable configuration: {direction} Hessian eigenvalue {eigenvalue:.6e}")


class FitError(NumericalError):
    """Raised when a scaling fit is singular or does not converge."""

    def __init__(self, message: str, trace: Optional[List[Any]] = None):
        self.trace = trace or []
        super().__init__(message)


class CouplingError(NumericalError):
    pass


class OracleError(NumericalError):
    pass


class ReportError(MagicStudioError):
    """Raised when report files cannot be written."""
    pass
