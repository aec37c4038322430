"""Exception hierarchy shared across the package."""


class QTGNError(Exception):
    """Base class for all package errors."""


class ZeroVector(QTGNError, ValueError):
    pass


class DimensionOverflow(QTGNError, ValueError):
    pass


class ShapeMismatch(QTGNError, ValueError):
    pass


class TimestampRegression(QTGNError, ValueError):
    pass


class DataError(QTGNError, ValueError):
    """Raised for malformed or unusable input data."""


class SchemaError(DataError):
    pass


class OrderError(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyQuerySet(QTGNError, ValueError):
    pass


class EmptyClass(QTGNError, ValueError):
    pass


class ConfigError(QTGNError, ValueError):
    pass


class CheckpointError(QTGNError, ValueError):
    pass
