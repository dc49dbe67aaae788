"""Exception hierarchy shared across the package."""


class MflstmError(Exception):
    """Base class for all package errors."""


class DomainError(MflstmError, ValueError):
    """Input outside the mathematical domain of an operation."""


class ShapeError(MflstmError, ValueError):
    """Array shapes or lengths are inconsistent."""


class AlignmentError(MflstmError):
    """Alignment produced no usable rows or sequences."""


class MultipleMismatchError(AlignmentError):
    """Sampling alignment requested on data with more than one mismatch ratio."""


class NumericalError(MflstmError, ArithmeticError):
    """Overflow or loss of finiteness that cannot be guarded against."""


class SingularDesignError(MflstmError):
    """Least-squares design matrix is rank deficient."""

    def __init__(self, message, dependent_columns=()):
        super().__init__(message)
        self.dependent_columns = tuple(dependent_columns)


class ConvergenceError(MflstmError):
    """No optimizer start converged."""


class DivergenceError(MflstmError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DegenerateComparisonError(MflstmError):
    """Two forecast error series have an identically zero loss differential."""


class SelectionError(MflstmError):
    """Model or variable selection could not produce a choice."""


class ConfigError(MflstmError):
    """Configuration failed schema validation."""
