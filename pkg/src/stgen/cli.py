"""Command line entry points: ``stgen`` and the standalone ``st-check``.

Exit codes: 0 success (or compile pass), 1 compile failure or rejected
records, 2 configuration or usage problems, 3 the external compiler could not run.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .bench import FORMATS, BenchError, load_tasks, report, run_benchmark
from .generator import run_pipeline
from .kb import (
    APILib, KbLoadError, build_index, dump_apilib, iter_api_records, iter_case_records, load_apilib, with_index,
)
from .llm import GatewayError, gateway_from_env
from .st import AdapterError, BuiltinAdapter, ExternalCommandAdapter
from .workspace import ConfigError, Workspace, read_task

CONFIG_EXIT = 2

path_in = click.Path(exists=True, dir_okay=False, path_type=Path)


def _fail(message: str, code: int = CONFIG_EXIT):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def workspace_options(fn):
    """Shared knobs that locate knowledge bases, templates and dialect profiles."""
    opts = [
        click.option("--apilib", "apilib_path", type=path_in, help="API library (one JSON record per line)."),
        click.option("--cases", "cases_path", type=path_in, help="Case library (one JSON record per line)."),
        click.option("--embeddings", "embeddings_path", type=path_in,
                     help="Precomputed case/task vectors; lexical ranking is used without it."),
        click.option("--templates", "templates_dir", type=click.Path(file_okay=False, path_type=Path),
                     help="Directory whose *.txt files override the bundled prompt templates."),
        click.option("--dialect-dir", "dialect_dirs", multiple=True,
                     type=click.Path(file_okay=False, path_type=Path),
                     help="Extra directory searched for dialect profiles."),
        click.option("--compiler-cmd", "compiler_command", help="External compiler command containing {source_file}."),
        click.option("--artifacts", "artifacts_dir", type=click.Path(file_okay=False, path_type=Path),
                     help="Write per-task artifacts under this directory."),
        click.option("--max-iterations", default=3, show_default=True, type=click.IntRange(0, 3)),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def llm_options(fn):
    fn = click.option("--record", type=click.Path(dir_okay=False, path_type=Path),
                      help="Call the live endpoint and append every exchange to this transcript.")(fn)
    fn = click.option("--replay", type=path_in,
                      help="Answer every model request from this transcript; no network access.")(fn)
    return fn


def _workspace(dialect: str, **kw) -> Workspace:
    return Workspace(dialect_id=dialect, **kw)


def _gateway(replay, record):
    if replay and record:
        _fail("--replay and --record are mutually exclusive")
    try:
        return gateway_from_env(replay=replay, record=record)
    except GatewayError as exc:
        _fail(str(exc))


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int) -> None:
    """Structured Text generation, checking and benchmarking."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


# -- kb --------------------------------------------------------------------

@main.group()
def kb() -> None:
    """Knowledge-base maintenance."""


def _looks_like_cases(path: Path) -> bool:
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                try:
                    first = json.loads(line)
                except json.JSONDecodeError:
                    return False
                return isinstance(first, dict) and "code" in first
    return False


@kb.command("validate")
@click.argument("path", type=path_in)
@click.option("--kind", type=click.Choice(["auto", "apilib", "cases"]), default="auto", show_default=True)
@click.option("--apilib", "apilib_path", type=path_in, help="Check case API references against this library.")
def kb_validate(path: Path, kind: str, apilib_path: Path | None) -> None:
    """Report every rejected record; exit 1 if there is any."""
    if kind == "auto":
        kind = "cases" if _looks_like_cases(path) else "apilib"
    if kind == "apilib":
        records = []
        names: dict[str, int] = {}
        for ordinal, item in iter_api_records(path):
            if not isinstance(item, KbLoadError):
                key = item.name.upper()
                if key in names:
                    item = KbLoadError(ordinal, "name", f"duplicate of record {names[key]}")
                else:
                    names[key] = ordinal
            records.append((ordinal, item))
    else:
        lib = load_apilib(apilib_path) if apilib_path else None
        records = list(iter_case_records(path, lib))
    bad = [item for _, item in records if isinstance(item, KbLoadError)]
    good = [item for _, item in records if not isinstance(item, KbLoadError)]
    for err in bad:
        click.echo(f"rejected {err}")
    for item in good:
        for flag in getattr(item, "flags", ()):
            click.echo(f"flagged case {item.id}: {flag.code} {flag.detail}".rstrip())
        if kind == "apilib" and not item.indexed:
            click.echo(f"unindexed {item.name}")
    click.echo(f"{len(good)} ok, {len(bad)} rejected")
    sys.exit(1 if bad else 0)


@kb.command("index")
@click.argument("path", type=path_in)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--templates", "templates_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--all", "reindex_all", is_flag=True, help="Rebuild indexes that already exist.")
@llm_options
def kb_index(path: Path, out: Path, templates_dir, reindex_all: bool, replay, record) -> None:
    """Ask the model for summary/scenarios/keywords on unindexed API entries."""
    try:
        lib = load_apilib(path)
    except (KbLoadError, ValueError) as exc:
        _fail(str(exc), 1)
    llm = _gateway(replay, record)
    entries = lib.entries()
    todo = [e for e in entries if reindex_all or not e.indexed]
    templates = Workspace(templates_dir=templates_dir).templates()
    indexed = {e.name: e for e in with_index(todo, build_index(todo, llm, templates))}
    dump_apilib(APILib([indexed.get(e.name, e) for e in entries]), out)
    missing = [e.name for e in indexed.values() if not e.indexed]
    click.echo(f"indexed {len(todo) - len(missing)} of {len(todo)}; wrote {out}")
    for name in missing:
        click.echo(f"unindexed {name}")


# -- checker ---------------------------------------------------------------

def _check(file: Path, dialect_id: str, apilib_path, compiler_cmd, dialect_dirs=()) -> None:
    ws = Workspace(dialect_id=dialect_id, apilib_path=apilib_path, dialect_dirs=tuple(dialect_dirs))
    try:
        dialect = ws.dialect()
        adapter = (ExternalCommandAdapter(compiler_cmd, dialect) if compiler_cmd
                   else BuiltinAdapter(dialect, ws.apilib()))
        rep = adapter.compile(file.read_text(encoding="utf-8"))
    except ConfigError as exc:
        _fail(str(exc))
    except AdapterError as exc:
        _fail(f"compiler adapter failed: {exc}", 3)
    click.echo(json.dumps({"file": str(file), "dialect": dialect_id, **rep.to_dict()}, indent=2))
    sys.exit(0 if rep.passed else 1)


check_options = [
    click.argument("file", type=path_in),
    click.option("--dialect", "dialect_id", default="codesys_st", show_default=True),
    click.option("--apilib", "apilib_path", type=path_in, help="Also resolve calls against this API library."),
    click.option("--compiler-cmd", help="Use an external compiler command containing {source_file}."),
    click.option("--dialect-dir", "dialect_dirs", multiple=True, type=click.Path(file_okay=False, path_type=Path)),
]


def check_args(fn):
    for opt in reversed(check_options):
        fn = opt(fn)
    return fn


@main.command("st-check")
@check_args
def st_check(file, dialect_id, apilib_path, compiler_cmd, dialect_dirs) -> None:
    """Check one ST file and print the diagnostics as JSON (exit 1 if any)."""
    _check(file, dialect_id, apilib_path, compiler_cmd, dialect_dirs)


@click.command("st-check")
@check_args
def st_check_main(file, dialect_id, apilib_path, compiler_cmd, dialect_dirs) -> None:
    """Check one ST file and print the diagnostics as JSON (exit 1 if any)."""
    _check(file, dialect_id, apilib_path, compiler_cmd, dialect_dirs)


# -- pipeline --------------------------------------------------------------

@main.group()
def task() -> None:
    """Single-task generation."""


@task.command("run")
@click.argument("task_file", type=path_in)
@click.option("--dialect", "dialect_id", help="Override the task's vendor_target.")
@click.option("--no-planning", is_flag=True)
@click.option("--no-cases", is_flag=True)
@click.option("--no-api-rec", is_flag=True)
@click.option("--no-self-improve", is_flag=True)
@workspace_options
@llm_options
def task_run(task_file, dialect_id, no_planning, no_cases, no_api_rec, no_self_improve, replay, record,
             **ws_kw) -> None:
    """Generate one unit, print the code and its report; exit 0 iff it compiles."""
    try:
        t = read_task(task_file)
        ws = _workspace(dialect_id or t.vendor_target, **ws_kw)
        config = ws.pipeline_config(planning=not no_planning, use_cases=not no_cases,
                                    api_rec=not no_api_rec, self_improve=not no_self_improve)
    except ConfigError as exc:
        _fail(str(exc))
    llm = _gateway(replay, record)
    result = run_pipeline(t, config, llm)
    if result.final_source:
        click.echo(result.final_source.rstrip("\n"))
        click.echo()
    click.echo(f"status: {result.status}  iterations: {result.iterations_used}  "
               f"errors: {result.error_count}  cost: {result.usage.cost:.4f}")
    if result.final_report is not None:
        for d in result.final_report.diagnostics:
            click.echo(f"  {d.line}:{d.col} {d.diag_class} {d.section} {d.message}")
    if result.error_message:
        click.echo(f"  {result.error_stage}: {result.error_message}")
    sys.exit(0 if result.passed else 1)


@main.group()
def bench() -> None:
    """Benchmark runs."""


@bench.command("run")
@click.argument("tasks_file", type=path_in)
@click.option("--dialect", "dialect_id", required=True)
@click.option("--no-planning", is_flag=True, help="Skip classification and planning; prompts carry no plan.")
@click.option("--no-cases", is_flag=True, help="Skip case retrieval; no few-shot block, no case-derived APIs.")
@click.option("--no-api-rec", is_flag=True, help="Skip API recommendation.")
@click.option("--no-self-improve", is_flag=True, help="Report the first compile; no repair rounds.")
@click.option("--workers", default=1, show_default=True, type=click.IntRange(1, 64))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
              help="Write metrics and every TaskResult as JSON here.")
@workspace_options
@llm_options
def bench_run(tasks_file, dialect_id, no_planning, no_cases, no_api_rec, no_self_improve, workers, fmt, out,
              replay, record, **ws_kw) -> None:
    """Run every task in a task file and print pass rate, average errors and the class table."""
    try:
        tasks = load_tasks(tasks_file)
    except BenchError as exc:
        _fail(str(exc))
    try:
        config = _workspace(dialect_id, **ws_kw).pipeline_config(
            planning=not no_planning, use_cases=not no_cases, api_rec=not no_api_rec,
            self_improve=not no_self_improve)
    except ConfigError as exc:
        _fail(str(exc))
    llm = _gateway(replay, record)
    run = run_benchmark(tasks, config, llm, workers=workers)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(run.to_dict(include_timing=True), indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")
    click.echo(report(run.metrics, fmt), nl=False)


# -- service ---------------------------------------------------------------

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--dialect", "dialect_id", default="codesys_st", show_default=True)
@workspace_options
@llm_options
def serve(host, port, dialect_id, replay, record, **ws_kw) -> None:
    """Serve the checker and task runner over HTTP."""
    import uvicorn

    from .service import create_app

    ws = _workspace(dialect_id, **ws_kw)
    try:
        llm = gateway_from_env(replay=replay, record=record)
    except GatewayError as exc:
        click.echo(f"warning: {exc}; /tasks/run disabled", err=True)
        llm = None
    uvicorn.run(create_app(ws, llm), host=host, port=port)


if __name__ == "__main__":
    main()
