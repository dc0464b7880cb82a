"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """Vector/matrix dimensions do not line up."""


class ParameterError(ValueError):
    """A parameter is outside its valid range."""


class InsufficientDataError(ValueError):
    """An operation needs more samples, sources, or tasks than supplied."""


class CrossModelError(ValueError):
    """Task representations from different models were mixed."""


class DegenerateMassError(ValueError):
    """The salient set carries (numerically) no importance mass."""


class NumericOverflowError(FloatingPointError):
    """A computation produced non-finite intermediate values."""


class ValidationError(ValueError):
    """A data file violates its schema or invariants."""


class CoverageError(ValueError):
    """The loaded bundles do not cover every (model, task) pair needed."""
