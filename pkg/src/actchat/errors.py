"""Exception types shared across the package."""


class ActChatError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(ActChatError):
    """Operands or parameters have incompatible shapes."""


class EmptyInputError(ActChatError):
    """An operation received an empty sequence where content is required."""


class ConfigError(ActChatError):
    """A configuration value is invalid or inconsistent."""


class DataError(ActChatError):
    """Input data is malformed or violates a documented contract."""


class StateError(ActChatError):
    """An operation was applied to an object in the wrong state."""


class BundleError(ActChatError):
    """A checkpoint file is corrupt, truncated, or has the wrong version."""
