"""Exception hierarchy shared by the library and the CLI."""


class XYDMError(Exception):
    """Base class for all library errors."""


class ValidationError(XYDMError, ValueError):
    """A value violates the invariants of its type."""


class DomainError(XYDMError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(XYDMError, ArithmeticError):
    """A numerical routine failed to reach its target accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class StructuralError(XYDMError):
    """A reduced state does not have the expected X shape."""
