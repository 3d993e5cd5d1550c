"""Static types used by the checker and the implicit-widening rules.

Elementary types are plain upper-case strings. Untyped numeric literals get the
pseudo types ``#INT`` and ``#REAL`` so that ``x := 1`` works for any integer,
real or bit-string target while ``i := 1.5`` into an INT does not.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .dialect import DialectProfile, Signature

UNKNOWN = "?"  # already reported or unresolvable: never triggers further diagnostics
VOID = "VOID"
INT_LIT = "#INT"
REAL_LIT = "#REAL"

SIGNED = ("SINT", "INT", "DINT", "LINT")
UNSIGNED = ("USINT", "UINT", "UDINT", "ULINT")
INTEGERS = frozenset(SIGNED + UNSIGNED)
REALS = frozenset({"REAL", "LREAL"})
BITS = frozenset({"BYTE", "WORD", "DWORD", "LWORD"})
NUMERIC = INTEGERS | REALS
STRINGS = frozenset({"STRING", "WSTRING", "CHAR", "WCHAR"})
DURATIONS = frozenset({"TIME", "LTIME"})
DATES = frozenset({"DATE", "TOD", "TIME_OF_DAY", "DT", "DATE_AND_TIME", "DTL", "LDT", "LTOD"})

GENERIC_MEMBERS = {
    "ANY": None,  # anything
    "ANY_ELEMENTARY": None,
    "ANY_NUM": NUMERIC,
    "ANY_REAL": REALS,
    "ANY_INT": INTEGERS,
    "ANY_SIGNED": frozenset(SIGNED),
    "ANY_UNSIGNED": frozenset(UNSIGNED),
    "ANY_BIT": BITS | {"BOOL"},
    "ANY_STRING": frozenset({"STRING", "WSTRING"}),
    "ANY_CHARS": STRINGS,
    "ANY_DATE": DATES,
    "ANY_DURATION": DURATIONS,
    "ANY_MAGNITUDE": NUMERIC | DURATIONS,
}


@dataclass(frozen=True)
class ArrayType:
    elem: object
    rank: int = 1

    def __str__(self) -> str:
        return f"ARRAY OF {self.elem}"


@dataclass(frozen=True)
class FbType:
    name: str
    signature: Signature

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class StructType:
    name: str
    members: tuple[tuple[str, str], ...]

    def member(self, name: str) -> str | None:
        for m, t in self.members:
            if m == name.upper():
                return t
        return None

    def __str__(self) -> str:
        return self.name


def show(t) -> str:
    if t == INT_LIT:
        return "integer literal"
    if t == REAL_LIT:
        return "real literal"
    return str(t)


def is_generic(name: str) -> bool:
    return name.upper() in GENERIC_MEMBERS


def generic_accepts(generic: str, t) -> bool:
    if t == UNKNOWN:
        return True
    members = GENERIC_MEMBERS[generic.upper()]
    if members is None:
        return True
    if t == INT_LIT:
        return bool(members & (INTEGERS | REALS | BITS))
    if t == REAL_LIT:
        return bool(members & REALS)
    return isinstance(t, str) and t in members


def is_numeric(t) -> bool:
    return t in NUMERIC or t in (INT_LIT, REAL_LIT)


def is_integer(t) -> bool:
    return t in INTEGERS or t == INT_LIT


def is_boolish(t) -> bool:
    return t in ("BOOL", UNKNOWN)


class TypeRules:
    """Assignability and operand unification under one dialect's widening table."""

    def __init__(self, dialect: DialectProfile):
        self.dialect = dialect
        self.widen = dialect.widening_closure
        # Opaque "accept anything" parameter types such as VARIANT or ANY.
        self.wildcards = frozenset(t for t in dialect.complex_types if t in ("ANY", "VARIANT"))

    def assignable(self, src, dst) -> bool:
        if src == UNKNOWN or dst == UNKNOWN:
            return True
        if src == dst:
            return True
        if isinstance(dst, str) and dst in self.wildcards:
            return True
        if isinstance(dst, str) and is_generic(dst):
            return generic_accepts(dst, src)
        if src == INT_LIT:
            return dst in INTEGERS or dst in REALS or dst in BITS
        if src == REAL_LIT:
            return dst in REALS
        if isinstance(src, ArrayType) and isinstance(dst, ArrayType):
            if UNKNOWN in (src.elem, dst.elem):
                return True
            return src.elem == dst.elem and src.rank == dst.rank
        if isinstance(src, str) and isinstance(dst, str):
            if src in ("STRING", "CHAR") and dst == "STRING":
                return True
            if src in ("WSTRING", "WCHAR") and dst == "WSTRING":
                return True
            return (src, dst) in self.widen
        return False

    def unify(self, a, b):
        """Common operand type of ``a`` and ``b`` or None when incompatible."""
        if a == UNKNOWN:
            return b
        if b == UNKNOWN:
            return a
        if a == b:
            return a
        if a in (INT_LIT, REAL_LIT) and b in (INT_LIT, REAL_LIT):
            return REAL_LIT
        if a in (INT_LIT, REAL_LIT) and self.assignable(a, b):
            return b
        if b in (INT_LIT, REAL_LIT) and self.assignable(b, a):
            return a
        if self.assignable(a, b):
            return b
        if self.assignable(b, a):
            return a
        return None


CONVERSION_RE = re.compile(r"^(?:(?P<src>[A-Z_]+?)_)?TO_(?P<dst>[A-Z_]+)$")


def split_conversion(name: str, dialect: DialectProfile) -> tuple[str | None, str] | None:
    """``INT_TO_REAL`` -> ("INT", "REAL"); ``TO_REAL`` -> (None, "REAL"); else None."""
    upper = name.upper()
    known = dialect.elementary_types | dialect.complex_types
    m = CONVERSION_RE.match(upper)
    if not m:
        return None
    src, dst = m.group("src"), m.group("dst")
    if dst not in known:
        return None
    if src is not None and src not in known:
        return None
    return src, dst
