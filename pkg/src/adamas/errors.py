"""Exception types shared across the package."""


class AdamasError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(AdamasError, ValueError):
    pass


class NotPowerOfTwoError(AdamasError, ValueError):
    pass


class DegenerateScaleError(AdamasError, ValueError):
    """Raised when a vector has zero RMS and thresholds cannot be scaled."""


class BitsMismatchError(AdamasError, ValueError):
    pass


class PackingError(AdamasError, ValueError):
    pass


class SelectionError(AdamasError, ValueError):
    """Invalid index set or budget for a selection policy."""


class CostModelError(AdamasError, ValueError):
    pass


class ConfigError(AdamasError, ValueError):
    """Malformed sweep/needle configuration (CLI exit code 1)."""
