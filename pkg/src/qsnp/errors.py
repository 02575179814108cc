"""Exception hierarchy shared by all modules.

``ParameterError`` signals an invalid configuration (CLI exit code 2);
``DomainError`` signals a numerical-domain failure such as a pole, an
overflow guard or a non-converging quadrature (CLI exit code 3).
"""


class ParameterError(ValueError):
    """Invalid or inconsistent input parameters."""


class DomainError(ArithmeticError):
    """A formula was evaluated outside its numerical domain."""


class OverflowGuardError(DomainError):
    """Unstable-mode amplitude would exceed the overflow cap."""


class QuadratureError(DomainError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
