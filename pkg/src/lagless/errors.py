"""Exception hierarchy.

Everything raised on bad input derives from :class:`LaglessError`; the CLI maps
those to exit code 1.  :class:`InvariantViolation` signals a broken internal
guarantee and maps to exit code 2.
"""

from __future__ import annotations


class LaglessError(Exception):
    """Base class for input-level failures."""


class VersionParseError(LaglessError, ValueError):
    pass


class OrderingError(LaglessError, ValueError):
    """Raised when a step goes from a newer version to an older one."""


class ResolutionError(LaglessError):
    """No available version satisfies a version specification."""


class LoadError(LaglessError):
    pass


class ValidationError(LoadError):
    pass


class LookupFailure(LaglessError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class ClosureError(LaglessError):
    pass


class GraphError(LaglessError):
    pass


class BuildError(GraphError):
    pass


class UpdateError(GraphError):
    pass


class OrderViolation(GraphError):
    """A node was evaluated before one of its dependents."""


class TreeParseError(LaglessError, ValueError):
    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class GenerationError(LaglessError, ValueError):
    pass


class InvariantViolation(Exception):
    """An internal guarantee does not hold (CLI exit code 2)."""
