"""Vendor knowledge bases: the API library and the requirement-to-code case library.

Both live on disk as UTF-8 JSON Lines, one record per line.

API library record::

    {"name": "MOVE_BLK_VARIANT", "description": "...", "kind": "FUNCTION",
     "return_type": "INT",
     "params": [{"name": "SRC", "type": "Variant", "direction": "IN", "description": ""}],
     "examples": ["..."],
     "index": {"summary": "...", "scenarios": ["..."], "keywords": ["move", "array"]}}

``index`` may be null for entries that have not been indexed yet.

Case library record::

    {"id": "c001", "task": {<Task>}, "plan": {<Plan>} | "free text" | null,
     "code": "FUNCTION_BLOCK ...", "apis": ["CONCAT"]}
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .llm import ChatRequest, GatewayError, LlmGateway
from .models import EMPTY_PLAN, Flagged, ParamSpec, Plan, SchemaError, Task
from .retrieval import split_identifier
from .templates import DEFAULT_TEMPLATES, TemplateSet
from .textproto import parse_json_payload

log = logging.getLogger(__name__)

UNKNOWN_API = "unknown-api"
PLAN_MISSING = "plan-missing"


class KbLoadError(ValueError):
    def __init__(self, ordinal: int, field_name: str, message: str):
        super().__init__(f"record {ordinal}: field {field_name!r}: {message}")
        self.ordinal = ordinal
        self.field = field_name


class KbConflictError(ValueError):
    pass


def normalize_keywords(words: Iterable[str]) -> frozenset[str]:
    """Lowercase keywords; identifiers also contribute their underscore/camelCase parts."""
    out: set[str] = set()
    for word in words:
        word = str(word).strip()
        if not word:
            continue
        out.add(word.lower())
        parts = split_identifier(word)
        if len(parts) > 1:
            out.update(parts)
    return frozenset(out)


@dataclass(frozen=True)
class ApiIndex:
    summary: str
    scenarios: tuple[str, ...]
    keywords: frozenset[str]

    def __post_init__(self):
        if any(k != k.lower() for k in self.keywords):
            raise SchemaError("keywords", "keywords must be lowercase")

    def document(self) -> str:
        return " ".join([self.summary, *self.scenarios, *sorted(self.keywords)])

    def to_dict(self) -> dict:
        return {"summary": self.summary, "scenarios": list(self.scenarios), "keywords": sorted(self.keywords)}

    @classmethod
    def from_dict(cls, data: dict) -> "ApiIndex":
        if not isinstance(data, dict):
            raise SchemaError("index", "must be an object")
        summary = data.get("summary", "")
        scenarios = data.get("scenarios", [])
        keywords = data.get("keywords", [])
        if not isinstance(summary, str):
            raise SchemaError("index.summary", "must be a string")
        if not isinstance(scenarios, list) or not all(isinstance(s, str) for s in scenarios):
            raise SchemaError("index.scenarios", "must be a list of strings")
        if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
            raise SchemaError("index.keywords", "must be a list of strings")
        kw = frozenset(k.lower() for k in keywords if k.strip())
        if not kw:
            raise SchemaError("index.keywords", "indexed entry needs at least one keyword")
        return cls(summary, tuple(scenarios), kw)


@dataclass(frozen=True)
class ApiEntry:
    name: str
    description: str = ""
    params: tuple[ParamSpec, ...] = ()
    examples: tuple[str, ...] = ()
    index: ApiIndex | None = None
    kind: str = "FUNCTION"
    return_type: str | None = None

    @property
    def indexed(self) -> bool:
        return self.index is not None

    def retrieval_document(self) -> str:
        if self.index is not None:
            return self.index.document()
        return f"{self.name} {self.description}"

    def signature(self) -> str:
        params = ", ".join(p.signature() for p in self.params)
        ret = f" : {self.return_type}" if self.return_type else ""
        return f"{self.kind} {self.name}({params}){ret}"

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "params": [p.to_dict() for p in self.params],
            "examples": list(self.examples),
            "index": self.index.to_dict() if self.index else None,
        }
        if self.return_type:
            out["return_type"] = self.return_type
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ApiEntry":
        if not isinstance(data, dict):
            raise SchemaError("record", "must be a JSON object")
        name = data.get("name")
        if not isinstance(name, str) or not name.strip():
            raise SchemaError("name", "must be a non-empty string")
        params_raw = data.get("params", [])
        if not isinstance(params_raw, list):
            raise SchemaError("params", "must be a list")
        params = []
        for i, p in enumerate(params_raw):
            try:
                params.append(ParamSpec.from_dict(p))
            except SchemaError as exc:
                raise SchemaError(f"params[{i}].{exc.field}", str(exc).split(": ", 1)[-1]) from None
        examples = data.get("examples", [])
        if not isinstance(examples, list) or not all(isinstance(e, str) for e in examples):
            raise SchemaError("examples", "must be a list of strings")
        kind = data.get("kind", "FUNCTION")
        if kind not in ("FUNCTION", "FUNCTION_BLOCK"):
            raise SchemaError("kind", f"{kind!r} is not FUNCTION or FUNCTION_BLOCK")
        index_raw = data.get("index")
        index = ApiIndex.from_dict(index_raw) if index_raw is not None else None
        return cls(
            name=name,
            description=data.get("description", "") or "",
            params=tuple(params),
            examples=tuple(examples),
            index=index,
            kind=kind,
            return_type=data.get("return_type"),
        )


class APILib(Mapping[str, ApiEntry]):
    """Immutable name-keyed API collection; lookups are case-insensitive."""

    def __init__(self, entries: Iterable[ApiEntry] = ()):
        by_key: dict[str, ApiEntry] = {}
        for entry in entries:
            key = entry.name.upper()
            if key in by_key:
                raise KbConflictError(f"duplicate API name {entry.name!r}")
            by_key[key] = entry
        self._by_key = MappingProxyType(by_key)

    def __getitem__(self, name: str) -> ApiEntry:
        return self._by_key[name.upper()]

    def __contains__(self, name: object) -> bool:
        return isinstance(name, str) and name.upper() in self._by_key

    def __iter__(self) -> Iterator[str]:
        return (e.name for e in self._by_key.values())

    def __len__(self) -> int:
        return len(self._by_key)

    def entries(self) -> list[ApiEntry]:
        return list(self._by_key.values())

    def canonical(self, name: str) -> str:
        return self[name].name


@dataclass(frozen=True)
class CaseRecord:
    id: str
    task: Task
    plan: Plan
    code: str
    apis: tuple[str, ...] = ()
    flags: tuple[Flagged, ...] = ()
    unknown_apis: frozenset[str] = frozenset()

    @property
    def name(self) -> str:
        return self.task.name

    def metadata_text(self) -> str:
        return f"{self.task.name} {self.task.req}"

    def has_flag(self, code: str) -> bool:
        return any(f.code == code for f in self.flags)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task.to_dict(),
            "plan": None if self.has_flag(PLAN_MISSING) else self.plan.to_dict(),
            "code": self.code,
            "apis": list(self.apis),
        }


@dataclass(frozen=True)
class CaseStore:
    cases: tuple[CaseRecord, ...] = ()
    rejected: tuple[tuple[int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def get(self, case_id: str) -> CaseRecord | None:
        for case in self.cases:
            if case.id == case_id:
                return case
        return None

    def view(self, keep) -> "CaseStore":
        return CaseStore(tuple(c for c in self.cases if keep(c)), self.rejected)


def _iter_jsonl(path: Path) -> Iterator[tuple[int, object]]:
    """Yield (1-based ordinal, decoded value or JSONDecodeError) per non-blank line."""
    with path.open(encoding="utf-8") as fh:
        ordinal = 0
        for line in fh:
            if not line.strip():
                continue
            ordinal += 1
            try:
                yield ordinal, json.loads(line)
            except json.JSONDecodeError as exc:
                yield ordinal, exc


def iter_api_records(path: str | Path) -> Iterator[tuple[int, ApiEntry | KbLoadError]]:
    for ordinal, data in _iter_jsonl(Path(path)):
        if isinstance(data, json.JSONDecodeError):
            yield ordinal, KbLoadError(ordinal, "<line>", f"invalid JSON ({data.msg})")
            continue
        try:
            yield ordinal, ApiEntry.from_dict(data)
        except SchemaError as exc:
            yield ordinal, KbLoadError(ordinal, exc.field, str(exc).split(": ", 1)[-1])


def load_apilib(path: str | Path) -> APILib:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    entries = []
    seen: dict[str, int] = {}
    for ordinal, item in iter_api_records(path):
        if isinstance(item, KbLoadError):
            raise item
        key = item.name.upper()
        if key in seen:
            raise KbConflictError(
                f"duplicate API name {item.name!r} (records {seen[key]} and {ordinal})"
            )
        seen[key] = ordinal
        entries.append(item)
    return APILib(entries)


def dump_apilib(lib: APILib, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for entry in lib.entries():
            fh.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")


def _case_from_dict(data: dict, ordinal: int, apilib: APILib | None) -> CaseRecord:
    if not isinstance(data, dict):
        raise SchemaError("record", "must be a JSON object")
    code = data.get("code")
    if not isinstance(code, str) or not code.strip():
        raise SchemaError("code", "empty code field")
    task = Task.from_dict(data.get("task"))
    flags: list[Flagged] = []
    plan_raw = data.get("plan")
    if plan_raw is None or (isinstance(plan_raw, str) and not plan_raw.strip()):
        plan = EMPTY_PLAN
        flags.append(Flagged(PLAN_MISSING))
    else:
        plan = Plan.from_dict(plan_raw)
    apis = data.get("apis", [])
    if not isinstance(apis, list) or not all(isinstance(a, str) for a in apis):
        raise SchemaError("apis", "must be a list of strings")
    unknown = frozenset(a for a in apis if apilib is not None and a not in apilib)
    if unknown:
        flags.append(Flagged(UNKNOWN_API, ", ".join(sorted(unknown))))
    case_id = str(data.get("id") or f"case{ordinal:04d}")
    return CaseRecord(case_id, task, plan, code, tuple(apis), tuple(flags), unknown)


def iter_case_records(path: str | Path, apilib: APILib | None = None):
    for ordinal, data in _iter_jsonl(Path(path)):
        if isinstance(data, json.JSONDecodeError):
            yield ordinal, KbLoadError(ordinal, "<line>", f"invalid JSON ({data.msg})")
            continue
        try:
            yield ordinal, _case_from_dict(data, ordinal, apilib)
        except SchemaError as exc:
            yield ordinal, KbLoadError(ordinal, exc.field, str(exc).split(": ", 1)[-1])


def load_rq2st(path: str | Path, apilib: APILib | None = None) -> CaseStore:
    """Load the case library. Bad records are rejected (kept in ``store.rejected``), not raised."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    cases: list[CaseRecord] = []
    rejected: list[tuple[int, str]] = []
    ids: set[str] = set()
    for ordinal, item in iter_case_records(path, apilib):
        if isinstance(item, KbLoadError):
            log.warning("rejected case %s", item)
            rejected.append((ordinal, str(item)))
            continue
        if item.id in ids:
            rejected.append((ordinal, f"record {ordinal}: duplicate case id {item.id!r}"))
            continue
        ids.add(item.id)
        for flag in item.flags:
            log.info("case %s flagged %s %s", item.id, flag.code, flag.detail)
        cases.append(item)
    return CaseStore(tuple(cases), tuple(rejected))


def dump_rq2st(store: CaseStore, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for case in store.cases:
            fh.write(json.dumps(case.to_dict(), ensure_ascii=False) + "\n")


def names_overlap(a: str, b: str) -> bool:
    a, b = a.lower(), b.lower()
    return a in b or b in a


def leakage_filter(task: Task, store: CaseStore) -> CaseStore:
    """Drop cases whose name contains, or is contained in, the task name (case-insensitive)."""
    return store.view(lambda case: not names_overlap(task.name, case.name))


def _index_prompt(entry: ApiEntry, templates: TemplateSet) -> str:
    params = "\n".join(f"- {p.signature()}: {p.description}" for p in entry.params) or "- (none)"
    examples = "\n\n".join(entry.examples) or "(none)"
    return templates.render(
        "index_user",
        name=entry.name,
        description=entry.description,
        params=params,
        examples=examples,
    )


def _parse_index(text: str) -> ApiIndex | None:
    data = parse_json_payload(text)
    if not isinstance(data, dict):
        return None
    summary, scenarios, keywords = data.get("summary"), data.get("scenarios"), data.get("keywords")
    if not isinstance(summary, str) or not isinstance(scenarios, list) or not isinstance(keywords, list):
        return None
    kw = normalize_keywords(keywords)
    if not kw:
        return None
    return ApiIndex(summary.strip(), tuple(str(s) for s in scenarios), kw)


def build_index(entries: Iterable[ApiEntry], llm: LlmGateway,
                templates: TemplateSet = DEFAULT_TEMPLATES) -> list[ApiIndex | None]:
    """Ask the model for a summary/scenarios/keywords index per entry.

    ``None`` marks an entry whose response could not be parsed after one retry.
    """
    system = templates.render("index_system")
    results: list[ApiIndex | None] = []
    for entry in entries:
        user = _index_prompt(entry, templates)
        index = None
        for attempt in range(2):
            prompt = user if attempt == 0 else user + templates.render("retry_json")
            try:
                reply = llm.complete(ChatRequest(system, prompt, tag="index"))
            except GatewayError as exc:
                log.warning("index request for %s failed: %s", entry.name, exc)
                break
            index = _parse_index(reply.text)
            if index is not None:
                break
        if index is None:
            log.warning("API %s left unindexed", entry.name)
        results.append(index)
    return results


def with_index(entries: Iterable[ApiEntry], indexes: Iterable[ApiIndex | None]) -> list[ApiEntry]:
    return [replace(e, index=i) for e, i in zip(entries, indexes)]
