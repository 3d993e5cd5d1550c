"""Helpers for pulling structured payloads out of free-form model responses."""
from __future__ import annotations

import json
import re
from typing import Any

_FENCE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)


def fenced_blocks(text: str) -> list[tuple[str, str]]:
    """All ``` fenced blocks as (language tag, body) in order of appearance."""
    return [(m.group(1).lower(), m.group(2)) for m in _FENCE.finditer(text or "")]


def first_code_block(text: str) -> str | None:
    blocks = fenced_blocks(text)
    if not blocks:
        return None
    return blocks[0][1]


def parse_json_payload(text: str) -> Any | None:
    """Decode the JSON payload of a response.

    Looks at fenced blocks first (json-tagged ones preferred), then the whole
    text, then the outermost brace/bracket span. Returns None if nothing decodes.
    """
    candidates: list[str] = []
    blocks = fenced_blocks(text)
    candidates += [body for lang, body in blocks if lang == "json"]
    candidates += [body for lang, body in blocks if lang != "json"]
    candidates.append(text or "")
    for opener, closer in (("{", "}"), ("[", "]")):
        start, end = (text or "").find(opener), (text or "").rfind(closer)
        if 0 <= start < end:
            candidates.append(text[start : end + 1])
    for cand in candidates:
        try:
            return json.loads(cand)
        except (json.JSONDecodeError, TypeError):
            continue
    return None
