"""Exceptions raised while reading IR text."""

from typing import List, Optional


class IRSyntaxError(ValueError):
    """Malformed IR text, unknown references or duplicate definitions."""

    def __init__(self, message: str, line: Optional[int] = None, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class IRValidationError(ValueError):
    """Program parsed but violates structural invariants."""

    def __init__(self, diagnostics: List):
        self.diagnostics = diagnostics
        lines = "; ".join(str(d) for d in diagnostics[:5])
        more = f" (+{len(diagnostics) - 5} more)" if len(diagnostics) > 5 else ""
        super().__init__(f"{len(diagnostics)} validation error(s): {lines}{more}")
