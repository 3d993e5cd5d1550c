"""Loads the hand-built ST fixtures and the counts written in their headers.

Header conventions: ``(* dialect: siemens_scl *)`` selects a dialect (default
codesys_st); ``(* expect: UNDEFINED=1 CALL=2 *)`` gives the exact nonzero
class counts. A file without an expect header must check clean.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from stgen.st import DIAGNOSTIC_CLASSES

ST_DIR = Path(__file__).parent / "fixtures" / "st"
_DIALECT = re.compile(r"\(\*\s*dialect:\s*(\w+)\s*\*\)")
_EXPECT = re.compile(r"\(\*\s*expect:\s*([^*]*)\*\)")


@dataclass(frozen=True)
class StFixture:
    path: Path
    source: str
    dialect_id: str
    expected: dict[str, int]

    @property
    def clean(self) -> bool:
        return not any(self.expected.values())


def load_fixture(path: Path) -> StFixture:
    source = path.read_text(encoding="utf-8")
    m = _DIALECT.search(source)
    expected = {c: 0 for c in DIAGNOSTIC_CLASSES}
    e = _EXPECT.search(source)
    if e:
        for part in e.group(1).split():
            cls, n = part.split("=")
            expected[cls] = int(n)
    return StFixture(path, source, m.group(1) if m else "codesys_st", expected)


def all_fixtures() -> list[StFixture]:
    return [load_fixture(p) for p in sorted(ST_DIR.glob("*/*.st"))]
