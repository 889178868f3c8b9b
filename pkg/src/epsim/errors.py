"""Exception types shared across the simulator."""


class EpsimError(Exception):
    """Base class for all package errors."""


class DomainError(EpsimError, ValueError):
    """An argument is outside the physical or mathematical domain of an operation."""


class ContractError(EpsimError, ValueError):
    """Inputs violate an interface contract (mismatched rates, wrong counts, ...)."""


class ConfigurationError(EpsimError, ValueError):
    """A configuration is internally inconsistent or produces an unstable system."""


class QuadratureError(EpsimError, RuntimeError):
    """Numerical integration failed to converge; carries diagnostics in args."""


class InsufficientDataError(EpsimError, ValueError):
    """Not enough events or samples for the requested statistic."""
