"""Exception types shared by the library and the command line."""
from __future__ import annotations


class WpdkitError(Exception):
    """Base class for every error raised on purpose by this package."""

    kind = "error"


class ParseError(WpdkitError):
    """Malformed input file; carries the 1-based line number when known."""

    kind = "parse"

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(WpdkitError, ValueError):
    """Input parsed fine but violates a mathematical requirement."""

    kind = "validation"


class NotFlipMeasureError(ValidationError):
    def __init__(self, detail: str = "") -> None:
        msg = "not a flip measure"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class CapExceededError(WpdkitError):
    """An exact solver was asked to run beyond its size cap."""

    kind = "cap"

    def __init__(self, cap_name: str, cap: int, size: int) -> None:
        self.cap_name = cap_name
        self.cap = cap
        self.size = size
        super().__init__(f"instance too large for exact mode: {cap_name}={size} exceeds cap {cap}")
