"""Exception hierarchy shared across the pipeline.

``InputError`` covers everything caused by bad data, bad files, or bad
configuration; the CLI maps it to exit code 2. Anything else that escapes
is a runtime error (exit code 1).
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PipelineError, ValueError):
    """Invalid input data, file contents, or configuration."""


class DimensionError(InputError):
    """A matrix or vector does not have the expected dimension."""


class IntegrityError(InputError):
    """Duplicate identifiers or other referential inconsistencies."""
