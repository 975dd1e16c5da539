"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class ErdbError(Exception):
    """Base class for all user-facing errors."""


class SchemaError(ErdbError):
    pass


class ParseError(ErdbError):
    """Syntax error with a source locus."""

    def __init__(self, message: str, line: int = 0, column: int = 0, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        where = f"line {line}, column {column}: " if line else ""
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{where}{message}{hint}")


class BindError(ErdbError):
    pass


class DataError(ErdbError):
    """A value document does not conform to the schema."""


class MappingError(ErdbError):
    pass


class CompileError(ErdbError):
    pass


class ExecutionError(ErdbError):
    """Raised by the store when a write set cannot be applied."""


class ReconstructionError(ErdbError):
    pass


class EmitError(ErdbError):
    pass


class MigrationError(ErdbError):
    pass


class InternalError(Exception):
    """An invariant that should hold by construction was violated."""
