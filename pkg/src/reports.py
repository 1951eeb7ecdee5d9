"""Diagnostic reports: one entry per axiom and level, each failure with its witness."""
from typing import Any, Optional

from pydantic import BaseModel, Field

from src.graph_core import Verdict


class Violation(BaseModel):
    axiom: str
    level: Optional[int] = None
    witness: Any = None
    message: str = ""

    def describe(self) -> str:
        where = f" at level {self.level}" if self.level is not None else ""
        return f"{self.axiom}{where}: {self.message} (witness: {self.witness!r})"


class AxiomReport(BaseModel):
    subject: str
    depth: int = 0
    axioms: list[str] = Field(default_factory=list)
    checked: dict[str, list[int]] = Field(default_factory=dict)
    violations: list[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def declare(self, axioms: list[str]) -> None:
        for axiom in axioms:
            if axiom not in self.axioms:
                self.axioms.append(axiom)
                self.checked.setdefault(axiom, [])

    def _mark(self, axiom: str, level: Optional[int]) -> None:
        self.declare([axiom])
        if level is not None and level not in self.checked[axiom]:
            self.checked[axiom].append(level)

    def record(self, axiom: str, level: Optional[int], verdict: Verdict) -> bool:
        """Mark ``axiom`` as checked at ``level``; keep the witness when the verdict failed."""
        self._mark(axiom, level)
        if not verdict:
            self.violations.append(
                Violation(axiom=axiom, level=level, witness=verdict.witness, message=verdict.message)
            )
        return bool(verdict)

    def fail(self, axiom: str, level: Optional[int], witness: Any, message: str) -> None:
        self._mark(axiom, level)
        self.violations.append(Violation(axiom=axiom, level=level, witness=witness, message=message))

    def passed(self, axiom: str, level: Optional[int]) -> None:
        self._mark(axiom, level)

    def failures(self, axiom: str) -> list[Violation]:
        return [v for v in self.violations if v.axiom == axiom]

    def merge(self, other: "AxiomReport") -> "AxiomReport":
        for axiom in other.axioms:
            self.declare([axiom])
            for level in other.checked.get(axiom, []):
                self._mark(axiom, level)
        self.violations.extend(other.violations)
        return self

    def lines(self) -> list[str]:
        """One line per axiom per level: ``AXIOM level i: PASS`` or ``FAIL <witness>``."""
        out = []
        for axiom in self.axioms:
            levels = sorted(self.checked.get(axiom, [])) or [None]
            for level in levels:
                where = f" level {level}" if level is not None else ""
                failed = [v for v in self.violations if v.axiom == axiom and v.level == level]
                if failed:
                    out.append(f"{axiom}{where}: FAIL {failed[0].message} witness={failed[0].witness!r}")
                else:
                    out.append(f"{axiom}{where}: PASS")
        return out
