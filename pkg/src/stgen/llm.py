"""Chat-completion gateway with a live HTTP backend and a record/replay backend.

Replay transcripts are line-delimited JSON, one interaction per line::

    {"tag": "plan", "digest": "<sha256>", "request": {...},
     "response": "<text>", "usage": {"prompt_tokens": 10,
     "completion_tokens": 5, "cost": 0.0001}}

Interactions are keyed by ``(tag, digest)`` where the digest covers the
request content, so replays do not depend on call order.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

log = logging.getLogger(__name__)


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """The live backend could not produce a response."""


class UnrecordedInteraction(GatewayError):
    def __init__(self, tag: str, digest: str):
        super().__init__(f"unrecorded interaction: tag={tag!r} digest={digest}")
        self.tag = tag
        self.digest = digest


class TranscriptIntegrityError(GatewayError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    tag: str
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self):
        if not self.tag:
            raise ValueError("ChatRequest.tag must be non-empty")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")

    def content(self) -> dict:
        return {
            "system": self.system,
            "user": self.user,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def digest(self) -> str:
        blob = json.dumps(self.content(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class UsageRecord:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    cost: float = 0.0

    def __post_init__(self):
        if self.prompt_tokens < 0 or self.completion_tokens < 0 or self.cost < 0:
            raise ValueError("usage values must be non-negative")

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def __add__(self, other: "UsageRecord") -> "UsageRecord":
        return UsageRecord(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.cost + other.cost,
        )

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "cost": self.cost,
        }


@dataclass(frozen=True)
class RawCompletion:
    text: str
    prompt_tokens: int
    completion_tokens: int
    cost: float | None = None


@dataclass(frozen=True)
class Completion:
    text: str
    usage: UsageRecord


@dataclass(frozen=True)
class Pricing:
    prompt_per_1k: float = 0.0
    completion_per_1k: float = 0.0

    def cost(self, prompt_tokens: int, completion_tokens: int) -> float:
        return (prompt_tokens * self.prompt_per_1k + completion_tokens * self.completion_per_1k) / 1000.0


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4) if text else 0


class Backend(Protocol):
    def complete(self, req: ChatRequest) -> RawCompletion: ...


class HttpChatBackend:
    """OpenAI-compatible ``/chat/completions`` client."""

    TRANSIENT_STATUS = {408, 409, 429, 500, 502, 503, 504}

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 2,
        backoff: float = 0.5,
        auth_header: str = "Authorization",
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.auth_header = auth_header
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            value = self.api_key if self.auth_header.lower() != "authorization" else f"Bearer {self.api_key}"
            headers[self.auth_header] = value
        return headers

    def complete(self, req: ChatRequest) -> RawCompletion:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self._client.post(self.endpoint, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last_error = exc
                log.warning("chat request %s failed (attempt %d): %s", req.tag, attempt + 1, exc)
                continue
            if resp.status_code in self.TRANSIENT_STATUS:
                last_error = TransportError(f"HTTP {resp.status_code}")
                log.warning("chat request %s got HTTP %d (attempt %d)", req.tag, resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp, req)
        raise TransportError(f"request {req.tag!r} failed after {self.max_retries + 1} attempts: {last_error}")

    @staticmethod
    def _parse(resp: httpx.Response, req: ChatRequest) -> RawCompletion:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed chat response: {exc}") from None
        usage = data.get("usage") or {}
        prompt_tokens = int(usage.get("prompt_tokens", estimate_tokens(req.system + req.user)))
        completion_tokens = int(usage.get("completion_tokens", estimate_tokens(text)))
        return RawCompletion(text or "", prompt_tokens, completion_tokens)

    def close(self):
        self._client.close()


def _read_transcript(path: Path) -> list[dict]:
    if not path.exists():
        return []
    records = []
    try:
        with path.open(encoding="utf-8") as fh:
            lines = list(fh)
    except OSError as exc:
        raise TranscriptIntegrityError(f"cannot read transcript {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise TranscriptIntegrityError(f"{path}:{lineno}: bad transcript record ({exc})") from None
    return records


class ReplayBackend:
    """Serves recorded responses; never touches the network."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._index: dict[tuple[str, str], dict] = {}
        for rec in _read_transcript(self.path):
            key = (rec["tag"], rec["digest"])
            prior = self._index.get(key)
            if prior is not None and prior["request"] != rec["request"]:
                raise TranscriptIntegrityError(f"conflicting records for {key}")
            self._index.setdefault(key, rec)

    def __len__(self) -> int:
        return len(self._index)

    def complete(self, req: ChatRequest) -> RawCompletion:
        digest = req.digest()
        rec = self._index.get((req.tag, digest))
        if rec is None or rec["request"] != req.content():
            raise UnrecordedInteraction(req.tag, digest)
        usage = rec.get("usage", {})
        return RawCompletion(
            rec["response"],
            int(usage.get("prompt_tokens", 0)),
            int(usage.get("completion_tokens", 0)),
            float(usage["cost"]) if "cost" in usage else None,
        )


class ScriptedBackend:
    """Answers from a Python callable; used to author transcripts and in tests."""

    def __init__(self, responder: Callable[[ChatRequest], str]):
        self.responder = responder
        self.calls: list[ChatRequest] = []

    def complete(self, req: ChatRequest) -> RawCompletion:
        self.calls.append(req)
        text = self.responder(req)
        return RawCompletion(text, estimate_tokens(req.system + req.user), estimate_tokens(text))


class RecordingBackend:
    """Wraps a backend and appends every interaction to a transcript file."""

    def __init__(self, inner: Backend, path: str | Path, pricing: Pricing | None = None,
                 digest_fn: Callable[[ChatRequest], str] | None = None):
        self.inner = inner
        self.path = Path(path)
        self.pricing = pricing or Pricing()
        self._digest = digest_fn or (lambda r: r.digest())
        self._lock = threading.Lock()
        self._seen: dict[tuple[str, str], dict] = {}
        for rec in _read_transcript(self.path):
            self._seen.setdefault((rec["tag"], rec["digest"]), rec["request"])

    def complete(self, req: ChatRequest) -> RawCompletion:
        digest = self._digest(req)
        key = (req.tag, digest)
        with self._lock:
            prior = self._seen.get(key)
            if prior is not None and prior != req.content():
                raise TranscriptIntegrityError(
                    f"digest collision for tag={req.tag!r} digest={digest}: different request content"
                )
        raw = self.inner.complete(req)
        cost = raw.cost if raw.cost is not None else self.pricing.cost(raw.prompt_tokens, raw.completion_tokens)
        rec = {
            "tag": req.tag,
            "digest": digest,
            "request": req.content(),
            "response": raw.text,
            "usage": {
                "prompt_tokens": raw.prompt_tokens,
                "completion_tokens": raw.completion_tokens,
                "cost": cost,
            },
        }
        with self._lock:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
            except OSError as exc:
                raise TranscriptIntegrityError(f"cannot write transcript {self.path}: {exc}") from exc
            self._seen.setdefault(key, req.content())
        return RawCompletion(raw.text, raw.prompt_tokens, raw.completion_tokens, cost)


def record_mode(backend: Backend, transcript: str | Path, pricing: Pricing | None = None) -> RecordingBackend:
    return RecordingBackend(backend, transcript, pricing)


@dataclass
class LlmGateway:
    """Thread-safe front door used by every pipeline stage."""

    backend: Backend
    pricing: Pricing = field(default_factory=Pricing)
    records: list[tuple[str, UsageRecord]] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.Lock()

    def complete(self, req: ChatRequest) -> Completion:
        raw = self.backend.complete(req)
        cost = raw.cost if raw.cost is not None else self.pricing.cost(raw.prompt_tokens, raw.completion_tokens)
        usage = UsageRecord(raw.prompt_tokens, raw.completion_tokens, cost)
        with self._lock:
            self.records.append((req.tag, usage))
        return Completion(raw.text, usage)

    def absorb(self, other: "LlmGateway") -> None:
        """Append another gateway's usage records to this one."""
        with other._lock:
            taken = list(other.records)
        with self._lock:
            self.records.extend(taken)

    @property
    def total_cost(self) -> float:
        with self._lock:
            return sum(u.cost for _, u in self.records)

    @property
    def total_tokens(self) -> int:
        with self._lock:
            return sum(u.total_tokens for _, u in self.records)


def gateway_from_env(env: dict | None = None, *, replay: str | Path | None = None,
                     record: str | Path | None = None) -> LlmGateway:
    """Build a gateway from ``STGEN_LLM_*`` variables.

    ``replay`` wins over the live backend; ``record`` wraps the live backend.
    """
    env = os.environ if env is None else env
    pricing = Pricing(
        float(env.get("STGEN_PRICE_PROMPT_PER_1K", 0) or 0),
        float(env.get("STGEN_PRICE_COMPLETION_PER_1K", 0) or 0),
    )
    if replay:
        return LlmGateway(ReplayBackend(replay), pricing)
    endpoint = env.get("STGEN_LLM_ENDPOINT")
    if not endpoint:
        raise GatewayError("no LLM backend: set STGEN_LLM_ENDPOINT or pass a replay transcript")
    backend: Backend = HttpChatBackend(
        endpoint=endpoint,
        model=env.get("STGEN_LLM_MODEL", "default"),
        api_key=env.get("STGEN_LLM_API_KEY"),
        timeout=float(env.get("STGEN_LLM_TIMEOUT", 60)),
        auth_header=env.get("STGEN_LLM_AUTH_HEADER", "Authorization"),
    )
    if record:
        backend = RecordingBackend(backend, record, pricing)
    return LlmGateway(backend, pricing)
