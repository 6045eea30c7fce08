"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A physically or structurally invalid configuration was requested."""


class StructureError(ValueError):
    """A matrix does not carry the structure an operation requires."""


class NumericalError(ArithmeticError):
    """An iterative routine produced non-finite or degenerate values."""
