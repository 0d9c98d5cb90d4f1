"""Exception types raised across the package."""


class ModelError(Exception):
    """Base class for every error raised by isetsim."""


class ParameterError(ModelError, ValueError):
    """An argument is outside its allowed range."""


class DegeneracyError(ModelError, ValueError):
    """Two directions are equal or antipodal where that is not allowed."""


class DomainError(ModelError, ValueError):
    """A mechanism precondition is violated."""


class InfeasibleError(ModelError):
    """No exact setting satisfies the lattice constraint inside the resolution cap."""


class ConfigError(ModelError, ValueError):
    """A configuration file failed to parse or validate."""
