"""
Exception hierarchy shared by the numerical core, the CLI and the API.

Each error carries the process exit code the CLI reports for it.
"""
from typing import Any, Dict, Optional


class PhaseQuantError(Exception):
    """Base class for every error raised by phasequant."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = dict(details or {})

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_dict(self) -> Dict[str, Any]:
        """Structured form used in JSON output and HTTP error bodies."""
        payload: Dict[str, Any] = {
            "type": self.kind,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        payload.update(self.details)
        return payload


# Usage / configuration (exit 1)

class ConfigurationError(PhaseQuantError):
    exit_code = 1


class ExpressionError(ConfigurationError):
    """Potential expression could not be turned into an AST."""


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}", {"offset": offset})
        self.offset = offset


class UnknownIdentifierError(ExpressionError):
    pass


class MultipleVariablesError(ExpressionError):
    pass


class ReportMismatchError(ConfigurationError):
    """Semiclassical and oracle level lists do not cover the same indices."""


# Numerical non-convergence (exit 2)

class NumericalFailureError(PhaseQuantError):
    exit_code = 2


class DegenerateTurningPointError(NumericalFailureError):
    pass


class InvalidCutError(NumericalFailureError):
    pass


class CutCountMismatchError(NumericalFailureError):
    def __init__(self, message: str, found: int, expected: int):
        super().__init__(message, {"found_cuts": found, "expected_cuts": expected})
        self.found = found
        self.expected = expected


class PhaseConsistencyError(NumericalFailureError):
    pass


class GridTooSmallError(NumericalFailureError):
    pass


# Domain / bound-state problems (exit 3)

class DomainViolationError(PhaseQuantError):
    exit_code = 3


class BoundStateError(PhaseQuantError):
    exit_code = 3


class NoCutsError(BoundStateError):
    pass


class UnboundedCutError(BoundStateError):
    pass


class BracketExpansionError(BoundStateError):
    pass


class UnphysicalLevelError(BoundStateError):
    pass
