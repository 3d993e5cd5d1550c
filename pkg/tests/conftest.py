from __future__ import annotations

from pathlib import Path

import pytest

from stgen.bench import load_tasks
from stgen.generator import PipelineConfig
from stgen.kb import load_apilib, load_rq2st
from stgen.llm import LlmGateway, Pricing, ReplayBackend
from stgen.retrieval import FixtureEmbeddings
from stgen.st import load_dialect

FIXTURES = Path(__file__).parent / "fixtures"
BENCH = FIXTURES / "bench"
TRANSCRIPT = BENCH / "transcript.jsonl"
PRICING = Pricing(prompt_per_1k=0.002, completion_per_1k=0.008)

# criterion name -> list of outcomes, filled by tests marked ``acceptance``
_acceptance: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): test backs one acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance_name", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.setdefault(marker, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        rep.acceptance_name = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcomes in _acceptance.items():
        if all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        elif all(o in ("passed", "skipped") for o in outcomes):
            verdict = "PASS"
        else:
            verdict = "FAIL"
        terminalreporter.write_line(f"{verdict} {name}")


def bench_config(**flags) -> PipelineConfig:
    apilib = load_apilib(BENCH / "apilib.jsonl")
    return PipelineConfig(
        dialect=load_dialect("codesys_st"),
        apilib=apilib,
        cases=load_rq2st(BENCH / "rq2st.jsonl", apilib),
        embeddings=FixtureEmbeddings(BENCH / "embeddings.jsonl"),
        **flags,
    )


def replay_gateway() -> LlmGateway:
    return LlmGateway(ReplayBackend(TRANSCRIPT), PRICING)


@pytest.fixture
def bench_tasks():
    return load_tasks(BENCH / "tasks.jsonl")


@pytest.fixture(scope="session")
def codesys():
    return load_dialect("codesys_st")


@pytest.fixture(scope="session")
def siemens():
    return load_dialect("siemens_scl")
