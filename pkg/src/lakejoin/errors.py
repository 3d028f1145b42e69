"""Exception types shared across the package."""


class LakejoinError(Exception):
    """Base class for all package errors."""


class DataError(LakejoinError):
    """Bad input data: unreadable CSV, unresolvable column, malformed truth file."""


class ConfigError(LakejoinError):
    """Invalid or inconsistent configuration."""


class ValidationError(LakejoinError):
    """A computed structure violates its contract (shape, NaN, weight sum)."""


class ProviderError(LakejoinError):
    """Embedding provider failure (unreachable endpoint, bad response)."""

    def __init__(self, message, endpoint=None, batch_index=None):
        super().__init__(message)
        self.endpoint = endpoint
        self.batch_index = batch_index


class ProtocolError(ProviderError):
    """Remote embedding response violates the wire protocol."""


class BundleFormatError(DataError):
    """Persisted index bundle is corrupt or has an unsupported format version."""
