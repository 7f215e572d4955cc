from .client import MagicCouplingStudio
from .config import Configuration, load_config, validate_config
from .errors import (ConfigurationError, ConvergenceError, CouplingError, FitError, MagicStudioError,
                     NumericalError, OracleError, ReportError, UnstableConfigurationError)

__all__ = [
    "MagicCouplingStudio",
    "Configuration",
    "load_config",
    "validate_config",
    "MagicStudioError",
    "ConfigurationError",
    "NumericalError",
    "ConvergenceError",
    "UnstableConfigurationError",
    "FitError",
    "CouplingError",
    "OracleError",
    "ReportError",
]
