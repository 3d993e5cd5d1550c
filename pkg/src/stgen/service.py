"""HTTP front end: checker, dialect listing and single-task runs."""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from . import __version__
from .generator import run_pipeline
from .llm import LlmGateway
from .models import SchemaError, Task
from .schemas import (
    CheckRequest, DialectOut, Health, ReportOut, TaskRunRequest, TaskRunResponse,
)
from .st import available_dialects, compile_source
from .workspace import ConfigError, Workspace


def create_app(workspace: Workspace, llm: LlmGateway | None = None) -> FastAPI:
    """Build the service around one workspace.

    ``llm`` is optional; without it ``/tasks/run`` answers 503 and the
    checker endpoints still work.
    """
    app = FastAPI(title="stgen", version=__version__)

    def dialect_or_404(dialect_id: str):
        try:
            return workspace.dialect(dialect_id)
        except ConfigError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.get("/health", response_model=Health)
    def health() -> Health:
        return Health(
            dialects=len(available_dialects(workspace.dialect_dirs)),
            apis=len(workspace.apilib()),
            cases=len(workspace.cases()),
        )

    @app.get("/dialects", response_model=list[DialectOut])
    def dialects() -> list[DialectOut]:
        ids = available_dialects(workspace.dialect_dirs)
        return [DialectOut(id=i, description=workspace.dialect(i).description) for i in ids]

    @app.post("/check", response_model=ReportOut, response_model_by_alias=True)
    def check(body: CheckRequest) -> ReportOut:
        dialect = dialect_or_404(body.dialect)
        report = compile_source(body.source, dialect=dialect, apilib=workspace.apilib())
        return ReportOut.model_validate(report.to_dict())

    @app.post("/tasks/run", response_model=TaskRunResponse, response_model_by_alias=True)
    def run_task(body: TaskRunRequest) -> TaskRunResponse:
        if llm is None:
            raise HTTPException(status_code=503, detail="no language model backend configured")
        try:
            task = Task.from_dict(body.task.model_dump())
        except SchemaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        dialect_or_404(task.vendor_target)
        config = workspace.pipeline_config(
            dialect_id=task.vendor_target,
            planning=body.flags.planning,
            use_cases=body.flags.cases,
            api_rec=body.flags.api_rec,
            self_improve=body.flags.self_improve,
        )
        result = run_pipeline(task, config, llm)
        report = result.final_report.to_dict() if result.final_report is not None else None
        return TaskRunResponse(
            task=result.task_name,
            status=result.status,
            iterations_used=result.iterations_used,
            final_source=result.final_source,
            final_report=ReportOut.model_validate(report) if report else None,
            error_stage=result.error_stage,
            error_message=result.error_message,
            cost=result.usage.cost,
            total_tokens=result.usage.total_tokens,
        )

    return app
