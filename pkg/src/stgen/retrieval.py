"""Few-shot case selection and the BM25 ranker shared with API recommendation."""
from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Protocol, Sequence

from .llm import ChatRequest, LlmGateway
from .templates import DEFAULT_TEMPLATES, TemplateSet
from .textproto import parse_json_payload

if TYPE_CHECKING:
    from .kb import CaseRecord, CaseStore
    from .models import Task

log = logging.getLogger(__name__)

CANDIDATE_COUNT = 5
RERANK_COUNT = 3

_WORD = re.compile(r"[A-Za-z0-9_]+")
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+[a-z]*")


def split_identifier(word: str) -> list[str]:
    """Lowercased parts of an identifier split on underscores and camelCase humps."""
    parts: list[str] = []
    for chunk in word.split("_"):
        if not chunk:
            continue
        pieces = _CAMEL.findall(chunk) or [chunk]
        # digits stay glued to the preceding piece: CRC16 -> crc16
        merged: list[str] = []
        for piece in pieces:
            if merged and piece[0].isdigit():
                merged[-1] += piece
            else:
                merged.append(piece)
        parts.extend(p.lower() for p in merged)
    return parts


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for word in _WORD.findall(text or ""):
        whole = word.lower()
        parts = split_identifier(word)
        tokens.append(whole)
        if len(parts) > 1:
            tokens.extend(parts)
    return tokens


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError("k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")


def bm25_rank(query: Sequence[str], corpus: Sequence[tuple[str, Sequence[str]]],
              params: Bm25Params = Bm25Params()) -> list[tuple[str, float]]:
    """Okapi BM25 over pre-tokenized documents.

    ``corpus`` is a sequence of ``(doc_id, tokens)``. Returns every document
    as ``(doc_id, score)``, best first, ties broken by ascending id. IDF is
    ``ln(1 + (N - df + 0.5) / (df + 0.5))`` so scores are never negative.
    """
    if not corpus:
        return []
    n_docs = len(corpus)
    counts = [Counter(tokens) for _, tokens in corpus]
    lengths = [len(tokens) for _, tokens in corpus]
    avgdl = sum(lengths) / n_docs
    df: Counter = Counter()
    for c in counts:
        df.update(c.keys())
    idf = {t: math.log(1.0 + (n_docs - df[t] + 0.5) / (df[t] + 0.5)) for t in set(query)}

    scored = []
    for (doc_id, _), tf, length in zip(corpus, counts, lengths):
        norm = params.k1 * (1.0 - params.b + params.b * (length / avgdl if avgdl else 1.0))
        score = 0.0
        for term in query:
            f = tf.get(term, 0)
            if f:
                score += idf[term] * f * (params.k1 + 1.0) / (f + norm)
        scored.append((doc_id, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


@dataclass(frozen=True)
class RankedCase:
    case_id: str
    similarity_score: float
    rerank_position: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.similarity_score) or self.similarity_score < 0:
            raise ValueError(f"bad similarity score {self.similarity_score}")
        if self.rerank_position is not None and self.rerank_position not in (1, 2, 3):
            raise ValueError(f"rerank position {self.rerank_position} outside 1..3")

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "similarity_score": self.similarity_score,
            "rerank_position": self.rerank_position,
        }


class ProviderError(RuntimeError):
    pass


class EmbeddingProvider(Protocol):
    def embed_task(self, task: "Task") -> Sequence[float]: ...

    def embed_case(self, case: "CaseRecord") -> Sequence[float]: ...


class FixtureEmbeddings:
    """Precomputed vectors, one JSON record per line.

    Case vectors: ``{"case_id": "c1", "vector": [...]}``; task vectors:
    ``{"task": "TaskName", "vector": [...]}``.
    """

    def __init__(self, path: str | Path | None = None, cases: dict | None = None, tasks: dict | None = None):
        self.cases: dict[str, list[float]] = dict(cases or {})
        self.tasks: dict[str, list[float]] = dict(tasks or {})
        if path is not None:
            with Path(path).open(encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    vec = [float(x) for x in rec["vector"]]
                    if "case_id" in rec:
                        self.cases[str(rec["case_id"])] = vec
                    elif "task" in rec:
                        self.tasks[str(rec["task"])] = vec

    def embed_task(self, task):
        try:
            return self.tasks[task.name]
        except KeyError:
            raise ProviderError(f"no fixture vector for task {task.name!r}") from None

    def embed_case(self, case):
        try:
            return self.cases[case.id]
        except KeyError:
            raise ProviderError(f"no fixture vector for case {case.id!r}") from None


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) != len(b):
        raise ProviderError(f"vector size mismatch {len(a)} != {len(b)}")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    if na == 0 or nb == 0:
        return 0.0
    return dot / (na * nb)


def task_query_text(task: "Task") -> str:
    return f"{task.req} {task.io_summary()}".strip()


def _lexical_scores(task, cases) -> list[tuple[str, float]]:
    corpus = [(c.id, tokenize(c.metadata_text())) for c in cases]
    return bm25_rank(tokenize(task_query_text(task)), corpus)


def candidate_cases(task: "Task", store: "CaseStore", provider: EmbeddingProvider | None = None,
                    k: int = CANDIDATE_COUNT) -> list[RankedCase]:
    """Top-k cases by embedding similarity, or by BM25 when no provider works.

    Embedding similarity is reported as ``(1 + cosine) / 2`` to keep scores
    non-negative without changing the order.
    """
    cases = list(store.cases)
    if not cases:
        return []
    scored: list[tuple[str, float]] | None = None
    if provider is not None:
        try:
            query = provider.embed_task(task)
            scored = [(c.id, (1.0 + cosine(query, provider.embed_case(c))) / 2.0) for c in cases]
            scored.sort(key=lambda item: (-item[1], item[0]))
        except ProviderError as exc:
            log.warning("embedding provider failed (%s); falling back to lexical ranking", exc)
            scored = None
    if scored is None:
        scored = _lexical_scores(task, cases)
    return [RankedCase(cid, max(0.0, score)) for cid, score in scored[: min(k, len(scored))]]


def _rerank_prompt(task, candidates, store, templates: TemplateSet) -> str:
    blocks = []
    for rc in candidates:
        case = store.get(rc.case_id)
        headline = case.plan.headline() if case else ""
        blocks.append(
            f"[{rc.case_id}] {case.name if case else ''}\n"
            f"Requirement: {case.task.req if case else ''}\n"
            f"Plan: {headline or '(none)'}"
        )
    return templates.render(
        "rerank_user",
        task_name=task.name,
        requirement=task.req,
        io=task.io_summary() or "(none)",
        candidates="\n\n".join(blocks),
        count=RERANK_COUNT,
    )


def _parse_ranking(text: str) -> list[str] | None:
    data = parse_json_payload(text)
    if isinstance(data, dict):
        data = data.get("ranking", data.get("ids"))
    if not isinstance(data, list) or not all(isinstance(x, (str, int)) for x in data):
        return None
    return [str(x) for x in data]


def rerank_cases(task: "Task", candidates: Sequence[RankedCase], store: "CaseStore", llm: LlmGateway,
                 templates: TemplateSet = DEFAULT_TEMPLATES) -> list[RankedCase]:
    """Let the model pick the most useful few-shot cases among the candidates.

    Ids the model invents are skipped; missing slots are filled in similarity order.
    """
    candidates = list(candidates)
    if len(candidates) <= RERANK_COUNT:
        log.info("rerank skipped: only %d candidate(s)", len(candidates))
        return [replace(c, rerank_position=i) for i, c in enumerate(candidates, 1)]
    system = templates.render("rerank_system")
    user = _rerank_prompt(task, candidates, store, templates)
    ranking = None
    for attempt in range(2):
        prompt = user if attempt == 0 else user + templates.render("retry_json")
        ranking = _parse_ranking(llm.complete(ChatRequest(system, prompt, tag="rerank")).text)
        if ranking is not None:
            break
    if ranking is None:
        log.warning("rerank response unparseable; using similarity order")
        ranking = []
    by_id = {c.case_id: c for c in candidates}
    chosen: list[str] = []
    for cid in ranking:
        if cid in by_id and cid not in chosen:
            chosen.append(cid)
        elif cid not in by_id:
            log.info("rerank named unknown case %r; skipped", cid)
        if len(chosen) == RERANK_COUNT:
            break
    for c in candidates:
        if len(chosen) == RERANK_COUNT:
            break
        if c.case_id not in chosen:
            chosen.append(c.case_id)
    return [replace(by_id[cid], rerank_position=i) for i, cid in enumerate(chosen, 1)]
