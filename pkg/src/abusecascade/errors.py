"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class PipelineError(Exception):
    exit_code = 2


class ConfigError(PipelineError):
    """Invalid configuration or usage; detected before any work starts."""

    exit_code = 1


class DataError(PipelineError):
    """Malformed, inconsistent or misaligned input data."""

    exit_code = 2


class DimensionError(DataError):
    pass


class BackendError(PipelineError):
    """An embedding backend could not be loaded or failed during inference."""

    exit_code = 3


class StorageError(PipelineError):
    """File I/O failure, bad container header, or checksum mismatch."""

    exit_code = 4


class ChecksumError(StorageError):
    pass
