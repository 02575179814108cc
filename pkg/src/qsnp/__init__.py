"""Superluminal pulse propagation, quantum noise and superfluorescence in inverted two-level media."""

from .errors import DomainError, OverflowGuardError, ParameterError, QuadratureError

__version__ = "0.1.0"

__all__ = ["DomainError", "OverflowGuardError", "ParameterError", "QuadratureError", "__version__"]
