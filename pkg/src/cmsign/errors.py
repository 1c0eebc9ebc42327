"""Exception types raised by cmsign."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration (unknown scheme, bad sizes, ...)."""


class CapacityError(ValueError):
    """Requested enumeration exceeds the supported problem size."""


class SchemaError(ValueError):
    """A persisted results file has a missing or mismatched schema header."""
