"""Exception hierarchy; the CLI maps each class to an exit code."""


class PipelineError(Exception):
    exit_code = 3


class ConfigError(PipelineError):
    """Missing or malformed configuration: config keys, columns, paths."""

    exit_code = 1


class DataValidationError(PipelineError, ValueError):
    exit_code = 2
