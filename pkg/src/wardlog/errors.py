"""Exception types shared across the package.

Every diagnostic that refers to program text carries a SourceSpan so the
CLI can print `line:col` locations.
"""

from __future__ import annotations

from typing import Optional

from .ast import SourceSpan


class WardlogError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, span: Optional[SourceSpan] = None):
        self.message = message
        self.span = span
        super().__init__(self.format())

    def format(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(WardlogError):
    """Syntax error, with position and the token set that was expected."""

    def __init__(self, message, span=None, expected: Optional[set[str]] = None):
        self.expected = frozenset(expected or ())
        if self.expected:
            message = f"{message} (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(message, span)


class ArityError(ParseError):
    """Predicate used with two different arities."""

    def __init__(self, message, span=None):
        super().__init__(message, span)


class PlanError(WardlogError):
    """Program rejected while building the evaluation pipeline."""


class CycleError(WardlogError):
    """Negation cycle: no stratification exists."""

    def __init__(self, message, witness: list[str], span=None):
        self.witness = list(witness)
        super().__init__(f"{message}: {' -> '.join(self.witness)}", span)


class EvalError(WardlogError):
    """Ill-typed or undefined expression evaluation at run time."""


class ResourceError(WardlogError):
    """A configured hard limit (resident fact count) was exceeded."""


class IoError(WardlogError):
    """External data problem: missing file, unwritable target."""


class SchemaError(WardlogError):
    """Bound data does not match the declared mapping (arity/type), with row."""

    def __init__(self, message, row: Optional[int] = None, span=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message, span)


class NotDerived(WardlogError):
    """Requested fact is absent from the final instance."""


class CapExceeded(WardlogError):
    """Too many weighted rules for exact world enumeration."""
