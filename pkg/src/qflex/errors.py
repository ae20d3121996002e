"""Exception hierarchy shared across the package."""


class QflexError(Exception):
    """Base class for all package errors."""


class ShapeError(QflexError, ValueError):
    """Dimension or qubit-count mismatch between operands."""


class ValidationError(QflexError, ValueError):
    """Invalid configuration, flag value, or constructor argument."""


class DataFormatError(QflexError, ValueError):
    """Malformed data file; message carries the offending line number."""


class DivergenceError(QflexError, RuntimeError):
    """Non-finite value encountered during training; message carries context."""
