"""Compiler adapters: the built-in checker, or an external vendor tool driven by a command template."""
from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .checker import analyze, to_diagnostics
from .diagnostics import Diagnostic, class_counts
from .dialect import DialectProfile
from .parser import RawDiag, parse


class AdapterError(RuntimeError):
    """The compiler could not be run or its output could not be understood.

    Distinct from a compile failure: the code was never judged.
    """


@dataclass(frozen=True)
class CompileReport:
    passed: bool
    diagnostics: tuple[Diagnostic, ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, diagnostics: Sequence[Diagnostic]) -> "CompileReport":
        return cls(not diagnostics, tuple(diagnostics))

    @property
    def error_count(self) -> int:
        return len(self.diagnostics)

    def by_section(self, section: str) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.section == section]

    def class_counts(self) -> dict[str, int]:
        return class_counts(self.diagnostics)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "error_count": self.error_count,
            "class_counts": self.class_counts(),
            "diagnostics": [d.to_dict() for d in self.diagnostics],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CompileReport":
        diags = tuple(Diagnostic.from_dict(d) for d in data.get("diagnostics", []))
        return cls(bool(data["pass"]), diags)


class CompilerAdapter(Protocol):
    name: str

    def compile(self, source: str) -> CompileReport: ...


class BuiltinAdapter:
    name = "builtin"

    def __init__(self, dialect: DialectProfile, apilib=None):
        self.dialect = dialect
        self.apilib = apilib

    def compile(self, source: str) -> CompileReport:
        return CompileReport.of(analyze(source, self.dialect, self.apilib).diagnostics)


class ExternalCommandAdapter:
    """Runs ``command`` (a template containing ``{source_file}``) and classifies its output.

    Each output line is matched against the dialect's ordered diagnostic
    patterns; the first match wins. Calls are serialized per adapter instance
    because vendor tools rarely tolerate concurrent use.
    """

    name = "external"

    def __init__(self, command: str | Sequence[str], dialect: DialectProfile, timeout: float = 120.0,
                 suffix: str = ".st"):
        if isinstance(command, str):
            command = shlex.split(command)
        if not any("{source_file}" in part for part in command):
            raise ValueError("external compiler command must contain a {source_file} placeholder")
        self.command = list(command)
        self.dialect = dialect
        self.timeout = timeout
        self.suffix = suffix
        self._lock = threading.Lock()

    def parse_output(self, output: str) -> list[RawDiag]:
        found = []
        for line in output.splitlines():
            line = line.rstrip()
            if not line:
                continue
            for pattern in self.dialect.diagnostic_patterns:
                m = pattern.compiled.match(line)
                if m is None:
                    continue
                groups = m.groupdict()
                row = int(groups.get("line") or 1)
                col = int(groups.get("col") or 1)
                code = groups.get("code") or pattern.code
                message = (groups.get("message") or line).strip()
                found.append(RawDiag(code, message, pattern.diag_class, (row, col), (row, col)))
                break
        return found

    def compile(self, source: str) -> CompileReport:
        with self._lock, tempfile.TemporaryDirectory(prefix="stgen-") as tmp:
            path = os.path.join(tmp, f"unit{self.suffix}")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(source)
            argv = [part.replace("{source_file}", path) for part in self.command]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout, check=False)
            except FileNotFoundError as exc:
                raise AdapterError(f"compiler command not found: {argv[0]}") from exc
            except subprocess.TimeoutExpired as exc:
                raise AdapterError(f"compiler command timed out after {self.timeout}s") from exc
            except OSError as exc:
                raise AdapterError(f"cannot run compiler command {argv[0]}: {exc}") from exc
        raw = self.parse_output(proc.stdout + "\n" + proc.stderr)
        if proc.returncode != 0 and not raw:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-1:] or [""]
            raise AdapterError(f"compiler exited with status {proc.returncode} without parseable diagnostics: {tail[0]}")
        unit, _ = parse(source, self.dialect)
        return CompileReport.of(to_diagnostics(raw, unit.decl_end, source))


def compile_source(source: str, adapter: CompilerAdapter | str = "builtin", dialect: DialectProfile | None = None,
                   apilib=None) -> CompileReport:
    """Compile with an adapter instance, or ``"builtin"`` to build one from ``dialect``."""
    if isinstance(adapter, str):
        if adapter != "builtin":
            raise ValueError(f"unknown adapter {adapter!r}")
        if dialect is None:
            raise ValueError("the builtin adapter needs a dialect profile")
        adapter = BuiltinAdapter(dialect, apilib)
    return adapter.compile(source)
