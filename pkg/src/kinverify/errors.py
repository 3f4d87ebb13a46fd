"""Exception hierarchy shared across the pipeline.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericalError -> 4.
"""


class KinverifyError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(KinverifyError):
    """Invalid configuration: bad flag values, inconsistent options."""


class DataError(KinverifyError):
    """Unreadable or malformed input data: images, feature files, manifests."""


class NumericalError(KinverifyError):
    """Numerical failure: non-SPD matrix, eigensolver breakdown, singular fit."""
