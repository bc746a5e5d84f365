"""Exception hierarchy; the CLI maps each branch to a distinct exit code."""


class NodulemlError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NodulemlError):
    """Invalid configuration, mapping file, or command-line arguments."""


class DataError(NodulemlError):
    """Malformed or unusable input data."""


class SchemaError(DataError):
    """Input data does not match the clinical schema (e.g. missing column)."""


class RowError(DataError):
    """A single row failed parsing; carries row index and field name."""

    def __init__(self, row_index, field, message):
        super().__init__(f"row {row_index}, field '{field}': {message}")
        self.row_index = row_index
        self.field = field


class ComputeError(NodulemlError):
    """A computation could not produce a defined result."""
