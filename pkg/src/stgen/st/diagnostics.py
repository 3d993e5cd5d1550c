from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .dialect import DIAGNOSTIC_CLASSES

UNDEFINED, MISMATCH, CALL, TYPE_CONVERSION, OTHER = DIAGNOSTIC_CLASSES
DECLARATION = "DECLARATION"
IMPLEMENTATION = "IMPLEMENTATION"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int
    col: int
    end_line: int
    end_col: int
    section: str
    diag_class: str

    def __post_init__(self):
        if self.diag_class not in DIAGNOSTIC_CLASSES:
            raise ValueError(f"unknown diagnostic class {self.diag_class!r}")
        if self.section not in (DECLARATION, IMPLEMENTATION):
            raise ValueError(f"unknown section {self.section!r}")

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "line": self.line,
            "col": self.col,
            "end_line": self.end_line,
            "end_col": self.end_col,
            "section": self.section,
            "class": self.diag_class,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Diagnostic":
        return cls(
            data["code"], data["message"], data["line"], data["col"],
            data["end_line"], data["end_col"], data["section"], data["class"],
        )

    def render(self) -> str:
        return f"{self.line}:{self.col}: {self.diag_class} [{self.code}] ({self.section.lower()}) {self.message}"


def class_counts(diagnostics) -> dict[str, int]:
    counts = Counter(d.diag_class for d in diagnostics)
    return {c: counts.get(c, 0) for c in DIAGNOSTIC_CLASSES}
