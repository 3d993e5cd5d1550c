"""Prompt assembly, initial generation, and the compile-and-patch repair loop."""
from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .api_rec import ApiCandidateSet, recommend
from .kb import APILib, ApiEntry, CaseRecord, CaseStore, leakage_filter
from .llm import ChatRequest, GatewayError, LlmGateway, TransportError, UsageRecord
from .models import Plan, SchemaError, Task
from .planner import PlanValidationError, classify_task, make_plan
from .retrieval import EmbeddingProvider, candidate_cases, rerank_cases
from .st import (
    DECLARATION, IMPLEMENTATION, AdapterError, BuiltinAdapter, CompileReport, DialectProfile, parse,
)
from .st.compiler import CompilerAdapter
from .templates import DEFAULT_TEMPLATES, TemplateSet
from .textproto import first_code_block, parse_json_payload

log = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 3
FEWSHOT_LIMIT = 3
SECTIONS = (DECLARATION, IMPLEMENTATION)
_UNIT_HEADER = re.compile(r"^\s*(FUNCTION_BLOCK|FUNCTION)\b", re.IGNORECASE | re.MULTILINE)

PASS, FAIL, ERRORED, INFRA_FAILED = "pass", "fail", "errored", "infra_failed"


class GenerationError(RuntimeError):
    """The model did not return usable code."""


# -- prompt ----------------------------------------------------------------

@dataclass(frozen=True)
class GenPrompt:
    system: str
    task_block: str
    plan_block: str = ""
    apis_block: str = ""
    fewshot_block: str = ""
    dialect_note: str = ""

    def blocks(self) -> dict[str, str]:
        return {
            "task": self.task_block,
            "plan": self.plan_block,
            "apis": self.apis_block,
            "fewshot": self.fewshot_block,
            "dialect": self.dialect_note,
        }

    @property
    def user(self) -> str:
        return "\n".join(b for b in self.blocks().values() if b)

    def present_sections(self) -> list[str]:
        return [name for name, text in self.blocks().items() if text]

    def to_dict(self) -> dict:
        return {"system": self.system, "user": self.user, "sections": self.present_sections()}


def api_signature_text(entry: ApiEntry) -> str:
    """Full signature listing for the prompt: header line, parameters, summary."""
    lines = [entry.signature()]
    for p in entry.params:
        desc = f"  -- {p.description}" if p.description else ""
        lines.append(f"    {p.signature()}{desc}")
    summary = entry.index.summary if entry.index is not None else entry.description
    if summary:
        lines.append(f"    Summary: {summary}")
    return "\n".join(lines)


def _fewshot_text(cases: Sequence[CaseRecord]) -> str:
    parts = []
    for i, case in enumerate(cases, 1):
        plan = case.plan.render() if not case.plan.is_empty else "(none)"
        parts.append(
            f"### Example {i}: {case.name}\nRequirement:\n{case.task.req}\nPlan:\n{plan}\n"
            f"Code:\n```st\n{case.code.strip()}\n```"
        )
    return "\n\n".join(parts)


def _dialect_note(dialect: DialectProfile | None, templates: TemplateSet) -> str:
    if dialect is None:
        return ""
    if dialect.conversion_requires_source:
        rule = "always name the source type, e.g. INT_TO_REAL; the short TO_REAL form is rejected"
    else:
        rule = "SRC_TO_DST names such as INT_TO_REAL; the short TO_REAL form is also accepted"
    return templates.render("gen_dialect", dialect_id=dialect.id, description=dialect.description or dialect.id,
                            conversion_rule=rule)


def build_prompt(task: Task, plan: Plan | None, apis: Sequence[ApiEntry], cases: Sequence[CaseRecord],
                 dialect: DialectProfile | None = None, templates: TemplateSet = DEFAULT_TEMPLATES) -> GenPrompt:
    """Deterministic prompt; a block whose input is empty is left out entirely."""
    return_clause = f" : {task.return_type}" if task.unit_kind == "FUNCTION" and task.return_type else ""
    task_block = templates.render(
        "gen_task", unit_kind=task.unit_kind, task_name=task.name, return_clause=return_clause,
        requirement=task.req, io=task.io_summary() or "(none)",
    )
    plan_block = templates.render("gen_plan", plan=plan.render()) if plan is not None and not plan.is_empty else ""
    apis_block = ""
    if apis:
        apis_block = templates.render("gen_apis", apis="\n\n".join(api_signature_text(a) for a in apis))
    fewshot_block = ""
    if cases:
        fewshot_block = templates.render("gen_fewshot", examples=_fewshot_text(list(cases)[:FEWSHOT_LIMIT]))
    return GenPrompt(
        system=templates.render("gen_system"),
        task_block=task_block,
        plan_block=plan_block,
        apis_block=apis_block,
        fewshot_block=fewshot_block,
        dialect_note=_dialect_note(dialect, templates),
    )


def _extract_code(text: str) -> str | None:
    block = first_code_block(text)
    if block is not None and block.strip():
        return block.strip() + "\n"
    return None


def generate_initial(prompt: GenPrompt, llm: LlmGateway, templates: TemplateSet = DEFAULT_TEMPLATES) -> str:
    """First fenced block of the answer; one re-request when there is none.

    After the re-request an unfenced answer is accepted as-is only if it looks
    like a program unit. Prose gives GenerationError.
    """
    reply = llm.complete(ChatRequest(prompt.system, prompt.user, tag="generate")).text
    code = _extract_code(reply)
    if code is not None:
        return code
    log.info("generation reply had no fenced block; asking again")
    reply = llm.complete(ChatRequest(prompt.system, prompt.user + templates.render("retry_code"), tag="generate")).text
    code = _extract_code(reply)
    if code is not None:
        return code
    if reply.strip() and _UNIT_HEADER.search(reply):
        return reply.strip() + "\n"
    raise GenerationError("model returned no code block after a re-request")


# -- patches ---------------------------------------------------------------

@dataclass(frozen=True)
class PatchEdit:
    find: str
    replace: str
    section: str = IMPLEMENTATION

    def __post_init__(self):
        if not self.find:
            raise SchemaError("find", "snippet to replace must be non-empty")
        if self.section not in SECTIONS:
            raise SchemaError("section", f"{self.section!r} is not DECLARATION or IMPLEMENTATION")

    def to_dict(self) -> dict:
        return {"find": self.find, "replace": self.replace, "section": self.section}


@dataclass(frozen=True)
class PatchSet:
    edits: tuple[PatchEdit, ...] = ()

    def to_dict(self) -> dict:
        return {"edits": [e.to_dict() for e in self.edits]}

    @classmethod
    def from_payload(cls, data) -> "PatchSet":
        if isinstance(data, dict):
            data = data.get("edits")
        if not isinstance(data, list):
            raise SchemaError("edits", "must be a list")
        edits = []
        for item in data:
            if not isinstance(item, dict):
                raise SchemaError("edits", "each edit must be an object")
            find, repl = item.get("find"), item.get("replace")
            if not isinstance(find, str) or not isinstance(repl, str):
                raise SchemaError("edits", "find and replace must be strings")
            section = str(item.get("section", IMPLEMENTATION)).upper()
            edits.append(PatchEdit(find, repl, section))
        return cls(tuple(edits))


@dataclass(frozen=True)
class PatchOutcome:
    index: int
    applied: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {"index": self.index, "applied": self.applied, "reason": self.reason}


def apply_patches(source: str, patches: PatchSet) -> tuple[str, list[PatchOutcome]]:
    """Apply edits in order. A snippet that is absent or not unique is skipped and logged."""
    outcomes = []
    for i, edit in enumerate(patches.edits):
        count = source.count(edit.find)
        if count != 1:
            reason = "snippet not found" if count == 0 else f"snippet is ambiguous ({count} matches)"
            log.warning("patch %d skipped: %s: %r", i, reason, edit.find[:60])
            outcomes.append(PatchOutcome(i, False, reason))
            continue
        start = source.index(edit.find)
        source = source[:start] + edit.replace + source[start + len(edit.find):]
        outcomes.append(PatchOutcome(i, True))
    return source, outcomes


# -- repair loop -----------------------------------------------------------

@dataclass(frozen=True)
class RoundRecord:
    """What one repair round sent and got back, kept for audit."""

    iteration: int
    focus: str
    diagnostics_sent: tuple
    prompt: str
    response: str
    patches: PatchSet
    outcomes: tuple[PatchOutcome, ...]
    source: str
    report: CompileReport

    def summary(self) -> dict:
        return {
            "iteration": self.iteration,
            "focus": self.focus,
            "diagnostics_sent": [d.to_dict() for d in self.diagnostics_sent],
            "edits": len(self.patches.edits),
            "applied": sum(1 for o in self.outcomes if o.applied),
            "skipped": [o.to_dict() for o in self.outcomes if not o.applied],
            "error_count": self.report.error_count,
        }


@dataclass(frozen=True)
class RepairState:
    iteration: int
    current_source: str
    last_report: CompileReport
    history: tuple[tuple[PatchSet, CompileReport], ...] = ()
    rounds: tuple[RoundRecord, ...] = ()
    max_iterations: int = DEFAULT_MAX_ITERATIONS

    def __post_init__(self):
        if self.iteration > self.max_iterations:
            raise ValueError(f"iteration {self.iteration} exceeds the limit {self.max_iterations}")


def declaration_region(source: str, dialect: DialectProfile | None = None) -> str:
    unit, _ = parse(source, dialect)
    return source[: unit.decl_end_offset]


def _render_diagnostics(diags) -> str:
    return "\n".join(f"- line {d.line}, col {d.col}: {d.diag_class} {d.message}" for d in diags)


def repair_round(state: RepairState, llm: LlmGateway, compiler: CompilerAdapter, unit_name: str = "the unit",
                 dialect: DialectProfile | None = None, templates: TemplateSet = DEFAULT_TEMPLATES) -> RepairState:
    """One compile-guided repair step; declaration errors are fixed before anything else."""
    if state.last_report.passed:
        raise ValueError("nothing to repair: the last report has no diagnostics")
    if state.iteration >= state.max_iterations:
        raise ValueError("iteration limit reached")
    decl = state.last_report.by_section(DECLARATION)
    if decl:
        focus, diags = DECLARATION, decl
        template, region = "repair_declaration", declaration_region(state.current_source, dialect)
    else:
        focus, diags = IMPLEMENTATION, state.last_report.by_section(IMPLEMENTATION)
        template, region = "repair_implementation", state.current_source
    system = templates.render("repair_system")
    user = templates.render(template, unit_name=unit_name, diagnostics=_render_diagnostics(diags),
                            source=region.rstrip("\n"))
    patches = None
    response = ""
    for attempt in range(2):
        prompt = user if attempt == 0 else user + templates.render("retry_json")
        response = llm.complete(ChatRequest(system, prompt, tag="repair")).text
        data = parse_json_payload(response)
        try:
            patches = PatchSet.from_payload(data)
            break
        except SchemaError as exc:
            log.info("repair answer unusable (attempt %d): %s", attempt + 1, exc)
    if patches is None:
        log.warning("repair round %d produced no usable patch set; round consumed", state.iteration + 1)
        patches = PatchSet()
    source, outcomes = apply_patches(state.current_source, patches)
    report = compiler.compile(source)
    record = RoundRecord(state.iteration + 1, focus, tuple(diags), user, response, patches, tuple(outcomes),
                         source, report)
    return RepairState(
        iteration=state.iteration + 1,
        current_source=source,
        last_report=report,
        history=state.history + ((patches, report),),
        rounds=state.rounds + (record,),
        max_iterations=state.max_iterations,
    )


# -- pipeline --------------------------------------------------------------

@dataclass
class PipelineConfig:
    dialect: DialectProfile
    apilib: APILib = field(default_factory=APILib)
    cases: CaseStore = field(default_factory=lambda: CaseStore(()))
    embeddings: EmbeddingProvider | None = None
    compiler: CompilerAdapter | None = None
    templates: TemplateSet = DEFAULT_TEMPLATES
    planning: bool = True
    use_cases: bool = True
    api_rec: bool = True
    self_improve: bool = True
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    artifacts_dir: Path | None = None

    @property
    def effective_max_iterations(self) -> int:
        return self.max_iterations if self.self_improve else 0

    def flags(self) -> dict:
        return {
            "planning": self.planning,
            "cases": self.use_cases,
            "api_rec": self.api_rec,
            "self_improve": self.self_improve,
            "max_iterations": self.effective_max_iterations,
        }

    def adapter(self) -> CompilerAdapter:
        return self.compiler if self.compiler is not None else BuiltinAdapter(self.dialect, self.apilib)


@dataclass
class TaskResult:
    task_name: str
    status: str
    final_source: str = ""
    final_report: CompileReport | None = None
    iterations_used: int = 0
    error_stage: str | None = None
    error_message: str | None = None
    artifacts: dict = field(default_factory=dict)
    usage: UsageRecord = field(default_factory=UsageRecord)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def error_count(self) -> int:
        return self.final_report.error_count if self.final_report is not None else 0

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "task": self.task_name,
            "status": self.status,
            "pass": self.passed,
            "iterations_used": self.iterations_used,
            "error_count": self.error_count,
            "final_source": self.final_source,
            "final_report": self.final_report.to_dict() if self.final_report is not None else None,
            "error_stage": self.error_stage,
            "error_message": self.error_message,
            "artifacts": self.artifacts,
            "usage": self.usage.to_dict(),
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def canonical_json(self) -> str:
        """Byte-stable serialization (timing excluded) used to compare replayed runs."""
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name) or "task"


class _Artifacts:
    def __init__(self, root: Path | None, task: Task):
        self.dir = root / _safe_name(task.name) if root is not None else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, rel: str, content) -> None:
        if self.dir is None:
            return
        path = self.dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        if not isinstance(content, str):
            content = json.dumps(content, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
        path.write_text(content, encoding="utf-8")


def run_pipeline(task: Task, config: PipelineConfig, llm: LlmGateway) -> TaskResult:
    """Plan, retrieve, recommend, generate, then compile and repair up to the iteration limit.

    Usage is metered on a private gateway so concurrent tasks do not mix their
    token counts. Files are written under ``config.artifacts_dir/<task>/``
    when it is set.
    """
    meter = LlmGateway(llm.backend, llm.pricing)
    started = time.perf_counter()
    out = _Artifacts(config.artifacts_dir, task)
    out.write("task.json", task.to_dict())
    artifacts: dict = {"flags": config.flags()}
    result = TaskResult(task.name, ERRORED, artifacts=artifacts)
    stage = "planning"
    try:
        plan = None
        if config.planning:
            label = classify_task(task, meter, config.templates)
            artifacts["classification"] = label
            plan = make_plan(task, label, meter, config.templates, config.dialect.reserved_words)
            artifacts["plan"] = plan.to_dict()
            out.write("plan.json", {"classification": label, "plan": plan.to_dict()})

        stage = "retrieval"
        cases: list[CaseRecord] = []
        if config.use_cases:
            store = leakage_filter(task, config.cases)
            candidates = candidate_cases(task, store, config.embeddings)
            ranked = rerank_cases(task, candidates, store, meter, config.templates)
            cases = [store.get(r.case_id) for r in ranked]
            artifacts["candidate_cases"] = [c.to_dict() for c in candidates]
            artifacts["cases"] = [r.case_id for r in ranked]
            out.write("cases.json", {"candidates": [c.to_dict() for c in candidates],
                                     "reranked": [r.to_dict() for r in ranked]})

        stage = "api_rec"
        apis: list[ApiEntry] = []
        if config.api_rec and len(config.apilib):
            rec: ApiCandidateSet = recommend(task, plan, cases, config.apilib, config.dialect, meter, config.templates)
            apis = [config.apilib[name] for name in sorted(rec.filtered, key=str.upper)]
            artifacts["apis"] = rec.to_dict()
            out.write("apis.json", rec.to_dict())

        stage = "generation"
        prompt = build_prompt(task, plan, apis, cases, config.dialect, config.templates)
        artifacts["prompt_sections"] = prompt.present_sections()
        out.write("prompt_system.txt", prompt.system)
        out.write("prompt_user.txt", prompt.user)
        source = generate_initial(prompt, meter, config.templates)

        stage = "compile"
        compiler = config.adapter()
        report = compiler.compile(source)
        out.write("round_0/source.st", source)
        out.write("round_0/report.json", report.to_dict())
        state = RepairState(0, source, report, max_iterations=config.effective_max_iterations)

        stage = "repair"
        while not state.last_report.passed and state.iteration < state.max_iterations:
            state = repair_round(state, meter, compiler, task.name, config.dialect, config.templates)
            rnd = state.rounds[-1]
            prefix = f"round_{rnd.iteration}"
            out.write(f"{prefix}/repair_prompt.txt", rnd.prompt)
            out.write(f"{prefix}/patches.json", {**rnd.patches.to_dict(),
                                                 "outcomes": [o.to_dict() for o in rnd.outcomes]})
            out.write(f"{prefix}/source.st", rnd.source)
            out.write(f"{prefix}/report.json", rnd.report.to_dict())
        artifacts["rounds"] = [r.summary() for r in state.rounds]
        result = replace(
            result,
            status=PASS if state.last_report.passed else FAIL,
            final_source=state.current_source,
            final_report=state.last_report,
            iterations_used=state.iteration,
        )
    except (AdapterError, TransportError) as exc:
        log.error("task %s: infrastructure failure in %s: %s", task.name, stage, exc)
        result = replace(result, status=INFRA_FAILED, error_stage=stage, error_message=str(exc))
    except (GenerationError, PlanValidationError, GatewayError, SchemaError) as exc:
        log.error("task %s: %s stage failed: %s", task.name, stage, exc)
        result = replace(result, status=ERRORED, error_stage=stage, error_message=str(exc))
    usage = UsageRecord()
    for _, rec in meter.records:
        usage = usage + rec
    llm.absorb(meter)
    result = replace(result, usage=usage, wall_time=time.perf_counter() - started)
    out.write("result.json", result.to_dict(include_timing=True))
    return result
