"""Domain records shared across the pipeline stages.

All records are frozen dataclasses with ``to_dict``/``from_dict`` helpers so
they can be written to the line-delimited knowledge-base files and to the
per-task artifact directory without a separate schema layer.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

DIRECTIONS = ("IN", "OUT", "INOUT")
UNIT_KINDS = ("FUNCTION_BLOCK", "FUNCTION")
LINEAR = "LINEAR"
STATE_MACHINE = "STATE_MACHINE"


class SchemaError(ValueError):
    """A record does not match its expected shape."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _req_str(data: dict, key: str, *, allow_empty: bool = False) -> str:
    value = data.get(key)
    if not isinstance(value, str):
        raise SchemaError(key, "missing or not a string")
    if not allow_empty and not value.strip():
        raise SchemaError(key, "must be non-empty")
    return value


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type_name: str
    direction: str = "IN"
    description: str = ""

    def __post_init__(self):
        if not self.type_name or not self.type_name.strip():
            raise SchemaError("type", "type name must be non-empty")
        if self.direction not in DIRECTIONS:
            raise SchemaError("direction", f"{self.direction!r} not in {DIRECTIONS}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.type_name,
            "direction": self.direction,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParamSpec":
        if not isinstance(data, dict):
            raise SchemaError("params", "parameter must be an object")
        return cls(
            name=_req_str(data, "name"),
            type_name=_req_str(data, "type"),
            direction=_req_str(data, "direction"),
            description=data.get("description", "") or "",
        )

    def signature(self) -> str:
        return f"{self.direction} {self.name} : {self.type_name}"


@dataclass(frozen=True)
class Task:
    """A generation request: requirement, typed I/O, unit kind and vendor target."""

    name: str
    req: str
    io: tuple[ParamSpec, ...] = ()
    unit_kind: str = "FUNCTION_BLOCK"
    vendor_target: str = "codesys_st"
    return_type: str | None = None

    def __post_init__(self):
        if self.unit_kind not in UNIT_KINDS:
            raise SchemaError("unit_kind", f"{self.unit_kind!r} not in {UNIT_KINDS}")

    def io_summary(self) -> str:
        return "; ".join(
            f"{p.name} {p.type_name} {p.direction} {p.description}".strip() for p in self.io
        )

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "req": self.req,
            "io": [p.to_dict() for p in self.io],
            "unit_kind": self.unit_kind,
            "vendor_target": self.vendor_target,
        }
        if self.return_type:
            out["return_type"] = self.return_type
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Task":
        if not isinstance(data, dict):
            raise SchemaError("task", "must be an object")
        io = data.get("io", [])
        if not isinstance(io, list):
            raise SchemaError("io", "must be a list")
        return cls(
            name=_req_str(data, "name"),
            req=_req_str(data, "req", allow_empty=True),
            io=tuple(ParamSpec.from_dict(p) for p in io),
            unit_kind=data.get("unit_kind", "FUNCTION_BLOCK"),
            vendor_target=data.get("vendor_target", "codesys_st"),
            return_type=data.get("return_type"),
        )


@dataclass(frozen=True)
class StateSpec:
    name: str
    description: str = ""


@dataclass(frozen=True)
class TransitionSpec:
    from_state: str
    to_state: str
    condition: str


@dataclass(frozen=True)
class Plan:
    kind: str = LINEAR
    steps: tuple[str, ...] = ()
    states: tuple[StateSpec, ...] = ()
    transitions: tuple[TransitionSpec, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.steps or self.states or self.transitions)

    def texts(self) -> list[str]:
        """Every natural-language fragment of the plan, in order."""
        if self.kind == LINEAR:
            return list(self.steps)
        out = [s.description or s.name for s in self.states]
        out.extend(t.condition for t in self.transitions)
        return out

    def headline(self) -> str:
        if self.kind == LINEAR:
            return self.steps[0] if self.steps else ""
        names = ", ".join(s.name for s in self.states)
        return f"state machine over {names}" if names else ""

    def render(self) -> str:
        if self.kind == LINEAR:
            return "\n".join(f"{i}. {s}" for i, s in enumerate(self.steps, 1))
        lines = ["States:"]
        lines += [f"- {s.name}: {s.description}" for s in self.states]
        lines.append("Transitions:")
        lines += [f"- {t.from_state} -> {t.to_state} when {t.condition}" for t in self.transitions]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        if self.kind == LINEAR:
            return {"kind": LINEAR, "steps": list(self.steps)}
        return {
            "kind": STATE_MACHINE,
            "states": [{"name": s.name, "description": s.description} for s in self.states],
            "transitions": [
                {"from": t.from_state, "to": t.to_state, "condition": t.condition}
                for t in self.transitions
            ],
        }

    @classmethod
    def from_dict(cls, data: Any) -> "Plan":
        if isinstance(data, str):
            # legacy single free-text blob
            return cls(kind=LINEAR, steps=(data,) if data.strip() else ())
        if not isinstance(data, dict):
            raise SchemaError("plan", "must be an object or a string")
        kind = str(data.get("kind", LINEAR)).upper()
        if kind == LINEAR:
            steps = data.get("steps", [])
            if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
                raise SchemaError("steps", "must be a list of strings")
            return cls(kind=LINEAR, steps=tuple(steps))
        if kind == STATE_MACHINE:
            try:
                states = tuple(
                    StateSpec(str(s["name"]), str(s.get("description", "")))
                    for s in data.get("states", [])
                )
                transitions = tuple(
                    TransitionSpec(str(t["from"]), str(t["to"]), str(t.get("condition", "")))
                    for t in data.get("transitions", [])
                )
            except (KeyError, TypeError, AttributeError) as exc:
                raise SchemaError("states", f"malformed state machine ({exc})") from None
            return cls(kind=STATE_MACHINE, states=states, transitions=transitions)
        raise SchemaError("kind", f"unknown plan kind {kind!r}")


EMPTY_PLAN = Plan()


@dataclass(frozen=True)
class Flagged:
    """Warning attached to a loaded record."""

    code: str
    detail: str = ""


__all__ = [
    "DIRECTIONS",
    "UNIT_KINDS",
    "LINEAR",
    "STATE_MACHINE",
    "SchemaError",
    "ParamSpec",
    "Task",
    "StateSpec",
    "TransitionSpec",
    "Plan",
    "EMPTY_PLAN",
    "Flagged",
]
