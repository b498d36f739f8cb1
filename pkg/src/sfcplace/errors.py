"""Exception types shared across the package."""


class SfcPlaceError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SfcPlaceError):
    """A config file is malformed or fails schema validation."""


class TopologyError(SfcPlaceError):
    """A topology violates a structural invariant (e.g. disconnected)."""


class PathNotFoundError(SfcPlaceError):
    """No path satisfying the query exists."""


class CapacityError(SfcPlaceError):
    """An allocation would exceed the usable processing capacity of a node."""


class SaturationError(SfcPlaceError):
    """Node utilization is at or beyond the latency-model saturation cap."""


class SizeLimitError(SfcPlaceError):
    """Instance exceeds the configured limits of the exact solver."""
