"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data or configuration violates a documented precondition."""


class SchemaError(ValidationError):
    """A required column is missing from an input table."""


class ParseError(ValidationError):
    """A cell could not be parsed; ``row`` is the 1-based data row index."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class NumericalError(RuntimeError):
    """A numerical routine could not produce a trustworthy result."""
