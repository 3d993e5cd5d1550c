"""Syntax tree for one ST program unit.

Every node carries ``pos = (line, col)`` of its first token and, where it
matters for diagnostics, ``end = (line, col)`` just past its last token.
"""
from __future__ import annotations

from dataclasses import dataclass, field

Pos = tuple[int, int]


@dataclass
class Node:
    pos: Pos = field(default=(1, 1), kw_only=True, compare=False)
    end: Pos = field(default=(1, 1), kw_only=True, compare=False)


# -- types -----------------------------------------------------------------

@dataclass
class TypeRef(Node):
    name: str  # upper-cased for keywords/elementary; as written for user types
    quoted: bool = False
    length: "Expr | None" = None  # STRING[n]
    dims: list[tuple["Expr", "Expr"]] = field(default_factory=list)
    elem: "TypeRef | None" = None
    unsupported: bool = False


# -- expressions -----------------------------------------------------------

@dataclass
class Expr(Node):
    pass


@dataclass
class Literal(Expr):
    kind: str  # INT REAL STRING WSTRING BOOL TYPED
    text: str
    lit_type: str | None = None


@dataclass
class Name(Expr):
    name: str
    hashed: bool = False
    quoted: bool = False


@dataclass
class Member(Expr):
    base: Expr
    member: str


@dataclass
class Index(Expr):
    base: Expr
    indices: list[Expr]


@dataclass
class Arg(Node):
    name: str | None
    value: Expr
    output: bool = False  # => binding


@dataclass
class Call(Expr):
    func: Expr
    args: list[Arg]


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Paren(Expr):
    inner: Expr


@dataclass
class ArrayInit(Expr):
    items: list[tuple[Expr | None, Expr]]  # (repeat count, value)


@dataclass
class StructInit(Expr):
    fields: list[tuple[str, Expr]]


@dataclass
class Unsupported(Expr):
    text: str


# -- statements ------------------------------------------------------------

@dataclass
class Stmt(Node):
    pass


@dataclass
class Assign(Stmt):
    target: Expr
    value: Expr


@dataclass
class CallStmt(Stmt):
    call: Call


@dataclass
class If(Stmt):
    branches: list[tuple[Expr, list[Stmt]]]
    else_body: list[Stmt] | None = None


@dataclass
class CaseLabel(Node):
    low: Expr
    high: Expr | None = None


@dataclass
class Case(Stmt):
    selector: Expr
    clauses: list[tuple[list[CaseLabel], list[Stmt]]]
    else_body: list[Stmt] | None = None


@dataclass
class For(Stmt):
    var: Name
    start: Expr
    stop: Expr
    step: Expr | None
    body: list[Stmt]


@dataclass
class While(Stmt):
    cond: Expr
    body: list[Stmt]


@dataclass
class Repeat(Stmt):
    body: list[Stmt]
    cond: Expr


@dataclass
class Exit(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class Return(Stmt):
    pass


@dataclass
class Empty(Stmt):
    pass


@dataclass
class Region(Stmt):
    name: str
    body: list[Stmt]


@dataclass
class Label(Stmt):
    name: str


@dataclass
class Goto(Stmt):
    label: str


@dataclass
class UnsupportedStmt(Stmt):
    text: str


# -- declarations ----------------------------------------------------------

@dataclass
class VarDecl(Node):
    names: list[tuple[str, Pos]]
    type: TypeRef
    init: Expr | None = None


@dataclass
class VarSection(Node):
    kind: str  # VAR_INPUT VAR_OUTPUT VAR_IN_OUT VAR VAR_TEMP ...
    decls: list[VarDecl]
    constant: bool = False
    retain: bool = False


@dataclass
class Unit(Node):
    kind: str  # FUNCTION_BLOCK | FUNCTION
    name: str
    quoted: bool = False
    return_type: TypeRef | None = None
    version: str | None = None
    sections: list[VarSection] = field(default_factory=list)
    body: list[Stmt] = field(default_factory=list)
    has_begin: bool = False
    decl_end: Pos = (1, 1)  # just past the last END_VAR (or the header)
    decl_end_offset: int = 0
