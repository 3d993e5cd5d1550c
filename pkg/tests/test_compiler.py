import sys
from pathlib import Path

import pytest

from stgen.st import (
    DECLARATION, IMPLEMENTATION, AdapterError, BuiltinAdapter, CompileReport, ExternalCommandAdapter, compile_source,
)

FAKE = Path(__file__).parent / "fixtures" / "compiler" / "fake_compiler.py"

CLEAN = "FUNCTION_BLOCK T\nVAR\n    n : INT;\nEND_VAR\nn := n + 1;\nEND_FUNCTION_BLOCK\n"
TWO_ERRORS = (
    "FUNCTION_BLOCK T\nVAR\n    n : INT; (* emit: C0077: Unknown type: 'FOO' *)\nEND_VAR\n"
    "n := m; (* emit: C0046: Identifier 'm' not defined *)\nEND_FUNCTION_BLOCK\n"
)


def external(codesys, *extra):
    return ExternalCommandAdapter([sys.executable, str(FAKE), "{source_file}", *extra], codesys)


def test_builtin_valid_unit(codesys):
    report = compile_source(CLEAN, dialect=codesys)
    assert report.passed and report.error_count == 0


def test_builtin_adapter_object(codesys):
    report = BuiltinAdapter(codesys).compile(CLEAN.replace("n + 1", "q"))
    assert not report.passed
    assert report.class_counts()["UNDEFINED"] == 1


def test_external_two_errors(codesys):
    report = external(codesys).compile(TWO_ERRORS)
    assert not report.passed
    assert report.error_count == 2
    assert [(d.line, d.section) for d in report.diagnostics] == [(3, DECLARATION), (5, IMPLEMENTATION)]
    assert report.diagnostics[1].diag_class == "UNDEFINED"
    assert report.diagnostics[0].code == "C0077"


def test_external_clean(codesys):
    assert external(codesys).compile(CLEAN).passed


def test_external_missing_command(codesys):
    adapter = ExternalCommandAdapter("no-such-compiler-xyz {source_file}", codesys)
    with pytest.raises(AdapterError, match="not found"):
        adapter.compile(CLEAN)


def test_external_crash_without_diagnostics(codesys):
    with pytest.raises(AdapterError, match="status 2"):
        external(codesys, "--crash").compile(CLEAN)


def test_command_needs_placeholder(codesys):
    with pytest.raises(ValueError):
        ExternalCommandAdapter("stc --check", codesys)


def test_report_round_trip(codesys):
    report = compile_source(TWO_ERRORS.replace("n := m", "n := FOO(1)"), dialect=codesys)
    again = CompileReport.from_dict(report.to_dict())
    assert again == report
    assert sum(report.class_counts().values()) == report.error_count


def test_unknown_adapter_name(codesys):
    with pytest.raises(ValueError):
        compile_source(CLEAN, adapter="tia", dialect=codesys)
