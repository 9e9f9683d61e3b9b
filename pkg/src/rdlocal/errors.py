"""Exception types shared across the package."""


class RDError(Exception):
    """Base class for all errors raised by rdlocal."""


class ConfigError(RDError):
    """Bad user input: missing columns, malformed flags, invalid options."""


class DataError(RDError):
    """Input data violates a precondition (bad cell, empty file, bad row)."""


class AnalysisError(RDError):
    """The requested analysis is not computable on the given data."""
