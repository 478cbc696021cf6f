"""Exception hierarchy shared by the whole package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class EegConnError(Exception):
    """Base class for all errors raised by eegconn."""


class ConfigError(EegConnError):
    """Invalid configuration, usage, or model/build parameters."""


class DataError(EegConnError):
    """Malformed or unusable input data (files, manifests, cohorts)."""


class NumericError(EegConnError):
    """Numerical failure: singular designs, divergence, non-finite values."""
