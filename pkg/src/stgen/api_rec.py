"""Stage 3: API candidate collection from three sources, then model filtering."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .llm import ChatRequest, LlmGateway, TransportError
from .models import Plan, Task
from .retrieval import bm25_rank, tokenize
from .templates import DEFAULT_TEMPLATES, TemplateSet
from .textproto import parse_json_payload

if TYPE_CHECKING:
    from .kb import APILib, CaseRecord
    from .st.dialect import DialectProfile

log = logging.getLogger(__name__)

PER_QUERY_TOP = 5
BATCH_SIZE = 15


@dataclass(frozen=True)
class ApiCandidateSet:
    similarity: frozenset[str] = frozenset()
    by_param: frozenset[str] = frozenset()
    by_case: frozenset[str] = frozenset()
    filtered: frozenset[str] = frozenset()

    @property
    def union(self) -> frozenset[str]:
        return self.similarity | self.by_param | self.by_case

    def to_dict(self) -> dict:
        return {
            "similarity": sorted(self.similarity),
            "by_param": sorted(self.by_param),
            "by_case": sorted(self.by_case),
            "union": sorted(self.union),
            "filtered": sorted(self.filtered),
        }


def plan_queries(plan: Plan | None) -> list[str]:
    if plan is None:
        return []
    return [t for t in plan.texts() if t.strip()]


def lambda_similarity(queries: Plan | Sequence[str] | None, apilib: "APILib",
                      top: int = PER_QUERY_TOP) -> frozenset[str]:
    """Union over plan steps of the top BM25 hits (score > 0) against the API index."""
    texts = plan_queries(queries) if isinstance(queries, Plan) or queries is None else list(queries)
    if not texts or not len(apilib):
        return frozenset()
    corpus = [(e.name, tokenize(e.retrieval_document())) for e in apilib.entries()]
    found: set[str] = set()
    for text in texts:
        ranked = bm25_rank(tokenize(text), corpus)
        found.update(name for name, score in ranked[:top] if score > 0)
    return frozenset(found)


def lambda_par(task: Task, apilib: "APILib", dialect: "DialectProfile") -> frozenset[str]:
    """APIs with a parameter of one of the task's complex (non-elementary) I/O types."""
    complex_types = {t.upper() for t in dialect.complex_types}
    wanted = {p.type_name.upper() for p in task.io} & complex_types
    if not wanted:
        return frozenset()
    return frozenset(
        e.name for e in apilib.entries() if any(p.type_name.upper() in wanted for p in e.params)
    )


def lambda_simcase(cases: Iterable["CaseRecord"]) -> frozenset[str]:
    out: set[str] = set()
    for case in cases:
        out.update(a for a in case.apis if a not in case.unknown_apis)
    return frozenset(out)


def batches(names: Iterable[str], size: int = BATCH_SIZE) -> list[list[str]]:
    ordered = sorted(set(names))
    return [ordered[i : i + size] for i in range(0, len(ordered), size)]


def _describe(entry) -> str:
    lines = [f"- name: {entry.name}"]
    if entry.index is not None:
        lines.append(f"  summary: {entry.index.summary}")
        if entry.index.scenarios:
            lines.append(f"  scenarios: {'; '.join(entry.index.scenarios)}")
    elif entry.description:
        lines.append(f"  summary: {entry.description}")
    params = ", ".join(p.signature() for p in entry.params) or "none"
    lines.append(f"  params: {params}")
    return "\n".join(lines)


def _parse_kept(text: str) -> list[str] | None:
    data = parse_json_payload(text)
    if isinstance(data, dict):
        data = data.get("keep", data.get("apis"))
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        return None
    return data


def filter_apis(candidates: Iterable[str], task: Task, plan: Plan | None, apilib: "APILib",
                llm: LlmGateway, templates: TemplateSet = DEFAULT_TEMPLATES) -> frozenset[str]:
    """Ask the model which candidates to keep, at most ``BATCH_SIZE`` per prompt.

    A batch whose response cannot be parsed (after one retry), or whose
    request fails in transport, is kept whole.
    """
    kept: set[str] = set()
    system = templates.render("api_filter_system")
    plan_text = plan.render() if plan is not None and not plan.is_empty else "(no plan)"
    for batch in batches(candidates):
        listing = "\n".join(_describe(apilib[name]) if name in apilib else f"- name: {name}" for name in batch)
        user = templates.render(
            "api_filter_user",
            task_name=task.name,
            requirement=task.req,
            io=task.io_summary() or "(none)",
            plan=plan_text,
            candidates=listing,
        )
        answer = None
        try:
            for attempt in range(2):
                prompt = user if attempt == 0 else user + templates.render("retry_json")
                answer = _parse_kept(llm.complete(ChatRequest(system, prompt, tag="api_filter")).text)
                if answer is not None:
                    break
        except TransportError as exc:
            log.warning("API filter request failed (%s)", exc)
        if answer is None:
            log.warning("API filter batch unparseable; keeping all %d candidates", len(batch))
            kept.update(batch)
            continue
        by_key = {n.upper(): n for n in batch}
        kept.update(by_key[a.upper()] for a in answer if a.upper() in by_key)
    return frozenset(kept)


def recommend(task: Task, plan: Plan | None, cases: Sequence["CaseRecord"], apilib: "APILib",
              dialect: "DialectProfile", llm: LlmGateway,
              templates: TemplateSet = DEFAULT_TEMPLATES) -> ApiCandidateSet:
    queries = plan_queries(plan) if plan is not None else [task.req]
    sim = lambda_similarity(queries, apilib)
    par = lambda_par(task, apilib, dialect)
    simcase = frozenset(n for n in lambda_simcase(cases) if n in apilib)
    simcase = frozenset(apilib.canonical(n) for n in simcase)
    union = sim | par | simcase
    filtered = filter_apis(union, task, plan, apilib, llm, templates)
    return ApiCandidateSet(sim, par, simcase, filtered)
