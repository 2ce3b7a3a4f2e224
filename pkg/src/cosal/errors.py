"""Exception hierarchy shared across the package."""


class CosalError(Exception):
    """Base class for all package errors."""


class ShapeError(CosalError):
    """Operand shapes are incompatible with the requested operation."""


class ConfigError(CosalError):
    """A configuration value is invalid or inconsistent."""


class ContractError(CosalError):
    """A call violated an operation's preconditions."""


class MetricUndefinedError(CosalError):
    """A metric is undefined for the given input (e.g. empty ground truth)."""


class CheckpointError(CosalError):
    """A checkpoint could not be read or fails its consistency checks."""


class NumericError(CosalError):
    """A numeric failure (NaN/Inf) was detected during training or inference."""
