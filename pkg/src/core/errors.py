"""
Error types raised by the planning toolkit.

Plan violations are returned as data by `validate_plan`; these exceptions are
reserved for inputs the toolkit cannot work with at all.
"""
from __future__ import annotations


class PlanningError(ValueError):
    """Base class for every error raised on bad planning input."""


class ParameterError(PlanningError):
    """A numeric parameter is out of its allowed range."""


class ValidationError(PlanningError):
    """An instance, plan or file does not match what it claims to be."""


class GenerationError(PlanningError):
    """Synthetic instance generation produced nothing usable."""


class OracleRefusal(PlanningError):
    """The exact solver refuses instances above its size guard."""
