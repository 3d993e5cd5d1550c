"""Request and response bodies for the HTTP service."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

ErrorClass = Literal["UNDEFINED", "MISMATCH", "CALL", "TYPE_CONVERSION", "OTHER"]


class DiagnosticOut(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    code: str
    message: str
    line: int
    col: int
    end_line: int
    end_col: int
    section: Literal["DECLARATION", "IMPLEMENTATION"]
    diag_class: ErrorClass = Field(alias="class")


class ReportOut(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    passed: bool = Field(alias="pass")
    error_count: int
    class_counts: dict[str, int]
    diagnostics: list[DiagnosticOut]


class CheckRequest(BaseModel):
    source: str
    dialect: str = "codesys_st"


class ParamIn(BaseModel):
    name: str
    type: str
    direction: Literal["IN", "OUT", "INOUT"] = "IN"
    description: str = ""


class TaskIn(BaseModel):
    name: str = Field(min_length=1)
    req: str
    io: list[ParamIn] = []
    unit_kind: Literal["FUNCTION", "FUNCTION_BLOCK"] = "FUNCTION_BLOCK"
    vendor_target: str = "codesys_st"
    return_type: Optional[str] = None


class Ablation(BaseModel):
    planning: bool = True
    cases: bool = True
    api_rec: bool = True
    self_improve: bool = True


class TaskRunRequest(BaseModel):
    task: TaskIn
    flags: Ablation = Ablation()


class TaskRunResponse(BaseModel):
    task: str
    status: Literal["pass", "fail", "errored", "infra_failed"]
    iterations_used: int
    final_source: str
    final_report: Optional[ReportOut] = None
    error_stage: Optional[str] = None
    error_message: Optional[str] = None
    cost: float
    total_tokens: int


class DialectOut(BaseModel):
    id: str
    description: str


class Health(BaseModel):
    status: Literal["ok"] = "ok"
    dialects: int
    apis: int
    cases: int
