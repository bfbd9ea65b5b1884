"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands live on spatial meshes of different sizes."""


class SingularOperatorError(ArithmeticError):
    """A linear operator is (numerically) singular where an inverse is needed."""


class TableauError(ValueError):
    """A Butcher tableau fails a consistency or order condition."""


class StabilityWarning(UserWarning):
    """An explicit stepper was constructed beyond its stability limit."""
