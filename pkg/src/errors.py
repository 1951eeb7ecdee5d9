"""Exception hierarchy shared by the library and the CLI."""
from typing import Any, Optional


class TwinnedError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(TwinnedError):
    """A value is malformed: unknown vertex, domain mismatch, length mismatch."""


class DepthError(StructuralError):
    """A depth or level index lies outside the available range."""


class EmptySetError(StructuralError):
    """An operation that needs a nonempty set received an empty one."""


class InvalidBackend(TwinnedError):
    """The system spec cannot be handled by the requested encoder."""


class AxiomViolation(TwinnedError):
    """An axiom that should hold after validation failed at runtime."""

    def __init__(self, axiom: str, witness: Any = None, message: str = ""):
        self.axiom = axiom
        self.witness = witness
        super().__init__(message or f"{axiom} violated (witness: {witness!r})")


class RefinementCapExceeded(TwinnedError):
    """Cover refinement hit the configured maximum granularity."""

    def __init__(self, level: int, granularity: int, report: Optional[Any] = None):
        self.level = level
        self.granularity = granularity
        self.report = report
        last = ""
        if report is not None and report.violations:
            last = f"; last failing condition: {report.violations[0].describe()}"
        super().__init__(
            f"refinement of level {level} gave up at granularity {granularity}{last}"
        )
