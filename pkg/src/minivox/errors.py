"""Exception types shared across the package."""


class MinivoxError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MinivoxError):
    """A configuration value violates its documented constraints."""


class DimensionError(MinivoxError):
    """A vector or frame does not match the dimension the callee requires."""


class ProtocolError(MinivoxError):
    """A feedback or arm-registry operation breaks the session protocol."""


class SnapshotError(MinivoxError):
    """A session snapshot cannot be restored (bad version or corrupt payload)."""


class EmbeddingFormatError(MinivoxError):
    """Base class for embedding-file parse failures."""


class EmbeddingHeaderError(EmbeddingFormatError):
    """The `dim=<d>` header line is missing or malformed."""


class EmbeddingRowError(EmbeddingFormatError):
    """A data row contains a token that does not parse as a float."""


class EmbeddingDimensionError(EmbeddingFormatError):
    """A data row has the wrong number of values for the declared dimension."""
