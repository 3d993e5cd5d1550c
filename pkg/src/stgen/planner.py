"""Stage 1: task-type classification and natural-language planning."""
from __future__ import annotations

import logging
import re

from .llm import ChatRequest, LlmGateway
from .models import LINEAR, STATE_MACHINE, Plan, SchemaError, Task
from .templates import DEFAULT_TEMPLATES, TemplateSet
from .textproto import parse_json_payload

log = logging.getLogger(__name__)

PROCESS_CONTROL = "PROCESS_CONTROL"
GENERAL_PURPOSE = "GENERAL_PURPOSE"

# English words that double as ST keywords; they may appear in plans.
ENGLISH_OVERLAP = frozenset({"AND", "OR", "NOT", "TO", "AT"})
DEFAULT_BLACKLIST = frozenset({
    "IF", "THEN", "ELSIF", "ELSE", "END_IF", "CASE", "OF", "END_CASE", "FOR", "BY", "DO",
    "END_FOR", "WHILE", "END_WHILE", "REPEAT", "UNTIL", "END_REPEAT", "EXIT", "RETURN",
    "VAR", "END_VAR", "VAR_INPUT", "VAR_OUTPUT", "VAR_IN_OUT", "VAR_TEMP",
    "FUNCTION", "END_FUNCTION", "FUNCTION_BLOCK", "END_FUNCTION_BLOCK", "XOR", "MOD",
})
_UPPER_TOKEN = re.compile(r"[A-Z][A-Z0-9_]*")


class PlanValidationError(ValueError):
    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class PlanningTransportError(RuntimeError):
    pass


def keyword_blacklist(reserved_words=None) -> frozenset[str]:
    words = frozenset(w.upper() for w in reserved_words) if reserved_words else DEFAULT_BLACKLIST
    return words - ENGLISH_OVERLAP


def code_tokens(text: str, blacklist: frozenset[str]) -> list[str]:
    """ST keywords written as whole upper-case tokens, plus any ``:=``.

    Matching is case-sensitive on purpose: lower-case "if"/"for"/"while"
    are ordinary English in a plan, upper-case IF/END_IF are pseudocode.
    """
    found = [tok for tok in _UPPER_TOKEN.findall(text) if tok in blacklist]
    if ":=" in text:
        found.append(":=")
    return found


def validate_plan(plan: Plan, blacklist: frozenset[str] = keyword_blacklist()) -> list[str]:
    problems: list[str] = []
    if plan.kind == LINEAR:
        if not plan.steps:
            problems.append("a linear plan needs at least one step")
        if any(not s.strip() for s in plan.steps):
            problems.append("plan steps must be non-empty")
    elif plan.kind == STATE_MACHINE:
        if not plan.states:
            problems.append("a state machine needs at least one state")
        names = [s.name for s in plan.states]
        if len({n.lower() for n in names}) != len(names):
            problems.append("state names must be unique")
        declared = {n.lower() for n in names}
        for t in plan.transitions:
            for end in (t.from_state, t.to_state):
                if end.lower() not in declared:
                    problems.append(f"transition references undeclared state {end!r}")
            if not t.condition.strip():
                problems.append(f"transition {t.from_state} -> {t.to_state} has no condition")
    else:
        problems.append(f"unknown plan kind {plan.kind!r}")
    texts = list(plan.texts())
    if plan.kind == STATE_MACHINE:
        texts += [s.name for s in plan.states]
    for text in texts:
        bad = code_tokens(text, blacklist)
        if bad:
            problems.append(f"plan text must be natural language, found code tokens {bad} in {text!r}")
    return problems


def _parse_label(text: str) -> str | None:
    norm = re.sub(r"[\s\-]+", "_", (text or "").strip().upper())
    hits = {label for label in (PROCESS_CONTROL, GENERAL_PURPOSE) if re.search(rf"(?<![A-Z]){label}(?![A-Z])", norm)}
    return hits.pop() if len(hits) == 1 else None


def classify_task(task: Task, llm: LlmGateway, templates: TemplateSet = DEFAULT_TEMPLATES) -> str:
    system = templates.render("classify_system")
    user = templates.render("classify_user", task_name=task.name, requirement=task.req,
                            io=task.io_summary() or "(none)")
    for attempt in range(2):
        prompt = user if attempt == 0 else user + templates.render("retry_label")
        label = _parse_label(llm.complete(ChatRequest(system, prompt, tag="classify")).text)
        if label:
            return label
    log.warning("task %s: classification unparseable twice; defaulting to %s", task.name, GENERAL_PURPOSE)
    return GENERAL_PURPOSE


def parse_plan(text: str) -> Plan:
    data = parse_json_payload(text)
    if data is None:
        raise SchemaError("plan", "no structured plan block found")
    return Plan.from_dict(data)


def make_plan(task: Task, kind: str, llm: LlmGateway, templates: TemplateSet = DEFAULT_TEMPLATES,
              reserved_words=None) -> Plan:
    expected = STATE_MACHINE if kind == PROCESS_CONTROL else LINEAR
    blacklist = keyword_blacklist(reserved_words)
    system = templates.render("plan_system")
    user = templates.render(
        "plan_state_machine" if expected == STATE_MACHINE else "plan_linear",
        task_name=task.name,
        requirement=task.req,
        io=task.io_summary() or "(none)",
    )
    prompt = user
    raw = ""
    problems: list[str] = []
    for attempt in range(2):
        raw = llm.complete(ChatRequest(system, prompt, tag="plan")).text
        try:
            plan = parse_plan(raw)
            problems = validate_plan(plan, blacklist)
            if plan.kind != expected:
                problems.insert(0, f"expected a {expected} plan, got {plan.kind}")
        except SchemaError as exc:
            problems = [str(exc)]
        if not problems:
            return plan
        log.info("plan for %s rejected (attempt %d): %s", task.name, attempt + 1, problems)
        prompt = user + templates.render("plan_retry", problems="\n".join(f"- {p}" for p in problems))
    raise PlanValidationError("; ".join(problems), raw)
