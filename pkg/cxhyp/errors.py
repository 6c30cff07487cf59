"""Exception hierarchy.

Preconditions derive from ValueError, numerical failures from RuntimeError,
so callers that only know the builtin types still catch them.  The CLI maps
ParseError -> 1, PreconditionError -> 2, ConvergenceError -> 3.
"""
from __future__ import annotations

from typing import Any, Dict, Optional


class CxhypError(Exception):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.diagnostics = dict(diagnostics or {})

    def to_record(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "diagnostics": self.diagnostics,
        }


class ParseError(CxhypError, ValueError):
    pass


class DimensionError(CxhypError, ValueError):
    pass


class PreconditionError(CxhypError, ValueError):
    pass


class NotInGroupError(PreconditionError):
    pass


class NotHyperbolicError(PreconditionError):
    pass


class DegenerateFormError(PreconditionError):
    pass


class DomainError(PreconditionError):
    pass


class ConvergenceError(CxhypError, RuntimeError):
    def __init__(
        self,
        message: str,
        diagnostics: Optional[Dict[str, Any]] = None,
        best: Any = None,
    ):
        super().__init__(message, diagnostics)
        self.best = best


class EigenConvergenceError(ConvergenceError):
    pass


class QuadratureError(ConvergenceError):
    pass


class CriticalPointError(ConvergenceError):
    pass


class EnumerationLimitError(ConvergenceError):
    pass
