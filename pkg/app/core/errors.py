# app/core/errors.py
from typing import Any


class FhrError(Exception):
    """Base class for every error raised by the package.

    `detail` is the human readable message; `context` carries structured fields
    that end up in the JSON log record and in CLI error reports.
    """

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "detail": self.detail, **self.context}


class DomainError(FhrError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class IllConditionedError(FhrError, ArithmeticError):
    def __init__(self, detail: str, cond: float, **context: Any):
        super().__init__(detail, cond=cond, **context)
        self.cond = cond


class EvaluationError(FhrError, ArithmeticError):
    """Non-finite value produced at a node, grid point or panel unit."""

    def __init__(self, detail: str, location: Any = None, **context: Any):
        super().__init__(detail, location=location, **context)
        self.location = location


class ConfigurationError(FhrError, ValueError):
    pass


class SchemaError(FhrError, ValueError):
    def __init__(self, detail: str, line: int, column: str | None = None, **context: Any):
        super().__init__(f"line {line}: {detail}", line=line, column=column, **context)
        self.line = line
        self.column = column


class UnsupportedInputError(FhrError, TypeError):
    pass
