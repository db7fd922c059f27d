"""Exception types shared across the package."""


class AdakernError(Exception):
    """Base class for all package-specific failures."""


class ParameterError(AdakernError):
    """A configuration value or hyperparameter is invalid (usage error)."""


class DataError(AdakernError):
    """Input data violates a structural requirement."""


class NumericalError(AdakernError):
    """A numerical routine failed to converge or produced unusable output."""
