"""Structured Text front end: lexer, parser, checker, printer and compiler adapters."""
from .checker import Analysis, analyze, check
from .compiler import AdapterError, BuiltinAdapter, CompileReport, ExternalCommandAdapter, compile_source
from .diagnostics import DECLARATION, IMPLEMENTATION, Diagnostic, class_counts
from .dialect import DIAGNOSTIC_CLASSES, DialectError, DialectProfile, available_dialects, load_dialect
from .parser import parse
from .printer import pretty

__all__ = [
    "AdapterError", "Analysis", "BuiltinAdapter", "CompileReport", "DECLARATION", "DIAGNOSTIC_CLASSES",
    "DialectError", "DialectProfile", "Diagnostic", "ExternalCommandAdapter", "IMPLEMENTATION",
    "analyze", "available_dialects", "check", "class_counts", "compile_source", "load_dialect", "parse", "pretty",
]
