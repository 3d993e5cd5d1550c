"""Declarative vendor dialect profiles.

A profile is a JSON file named ``<id>.json``. The packaged profiles live in
``stgen/dialects``; extra directories can be searched first.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

from ..models import ParamSpec

PACKAGED_DIR = Path(__file__).resolve().parent.parent / "dialects"
DIAGNOSTIC_CLASSES = ("UNDEFINED", "MISMATCH", "CALL", "TYPE_CONVERSION", "OTHER")


class DialectError(LookupError):
    pass


@dataclass(frozen=True)
class Signature:
    name: str
    kind: str = "FUNCTION"
    params: tuple[ParamSpec, ...] = ()
    return_type: str | None = None
    variadic: bool = False

    @property
    def inputs(self) -> tuple[ParamSpec, ...]:
        return tuple(p for p in self.params if p.direction in ("IN", "INOUT"))

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name.upper() == name.upper():
                return p
        return None

    @classmethod
    def from_dict(cls, data: dict) -> "Signature":
        return cls(
            name=data["name"],
            kind=data.get("kind", "FUNCTION"),
            params=tuple(ParamSpec.from_dict(p) for p in data.get("params", [])),
            return_type=data.get("return_type"),
            variadic=bool(data.get("variadic", False)),
        )


@dataclass(frozen=True)
class DiagnosticPattern:
    regex: str
    diag_class: str
    code: str = "external"

    @cached_property
    def compiled(self) -> re.Pattern:
        return re.compile(self.regex)


@dataclass(frozen=True)
class DialectProfile:
    id: str
    reserved_words: frozenset[str]
    elementary_types: frozenset[str]
    complex_types: frozenset[str]
    builtins: tuple[Signature, ...] = ()
    struct_types: dict = field(default_factory=dict, hash=False, compare=False)
    widening: tuple[tuple[str, str], ...] = ()
    conversion_requires_source: bool = True
    extensions: frozenset[str] = frozenset()
    diagnostic_patterns: tuple[DiagnosticPattern, ...] = ()
    description: str = ""

    def __post_init__(self):
        overlap = self.elementary_types & self.complex_types
        if overlap:
            raise DialectError(f"profile {self.id}: types both elementary and complex: {sorted(overlap)}")

    def allows(self, feature: str) -> bool:
        return feature in self.extensions

    @cached_property
    def builtin_map(self) -> dict[str, Signature]:
        return {s.name.upper(): s for s in self.builtins}

    @cached_property
    def widening_closure(self) -> frozenset[tuple[str, str]]:
        edges: dict[str, set[str]] = {}
        for src, dst in self.widening:
            edges.setdefault(src, set()).add(dst)
        closure = set()
        for start in edges:
            stack, seen = [start], set()
            while stack:
                for nxt in edges.get(stack.pop(), ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            closure.update((start, d) for d in seen)
        return frozenset(closure)

    def known_type_names(self) -> frozenset[str]:
        return self.elementary_types | self.complex_types

    @classmethod
    def from_dict(cls, data: dict) -> "DialectProfile":
        conv = data.get("conversion", {})
        return cls(
            id=data["id"],
            description=data.get("description", ""),
            reserved_words=frozenset(w.upper() for w in data.get("reserved_words", [])),
            elementary_types=frozenset(t.upper() for t in data.get("elementary_types", [])),
            complex_types=frozenset(t.upper() for t in data.get("complex_types", [])),
            builtins=tuple(Signature.from_dict(s) for s in data.get("builtins", [])),
            struct_types={
                k.upper(): {m.upper(): t.upper() for m, t in v.items()}
                for k, v in data.get("struct_types", {}).items()
            },
            widening=tuple((a.upper(), b.upper()) for a, b in data.get("widening", [])),
            conversion_requires_source=bool(conv.get("requires_source", True)),
            extensions=frozenset(data.get("extensions", [])),
            diagnostic_patterns=tuple(
                DiagnosticPattern(p["regex"], p["class"], p.get("code", "external"))
                for p in data.get("diagnostic_patterns", [])
            ),
        )


def available_dialects(search_dirs: Iterable[str | Path] = ()) -> list[str]:
    ids = set()
    for d in [*map(Path, search_dirs), PACKAGED_DIR]:
        if d.is_dir():
            ids.update(p.stem for p in d.glob("*.json"))
    return sorted(ids)


def load_dialect(dialect_id: str, search_dirs: Iterable[str | Path] = ()) -> DialectProfile:
    for d in [*map(Path, search_dirs), PACKAGED_DIR]:
        path = d / f"{dialect_id}.json"
        if path.is_file():
            data = json.loads(path.read_text(encoding="utf-8"))
            for pat in data.get("diagnostic_patterns", []):
                if pat.get("class") not in DIAGNOSTIC_CLASSES:
                    raise DialectError(f"{path}: unknown diagnostic class {pat.get('class')!r}")
            return DialectProfile.from_dict(data)
    raise DialectError(f"unknown dialect id {dialect_id!r} (available: {', '.join(available_dialects(search_dirs))})")
