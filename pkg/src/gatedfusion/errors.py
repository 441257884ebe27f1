"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration errors exit 1,
data errors exit 2, numerical failures exit 3.
"""


class GatedFusionError(Exception):
    """Base class for all package errors."""


class ConfigError(GatedFusionError):
    """Invalid configuration, incompatible shapes, or a malformed checkpoint."""


class DataError(GatedFusionError):
    """Missing or malformed input data."""


class NumericalError(GatedFusionError):
    """Non-finite loss or other numerical breakdown during training."""
