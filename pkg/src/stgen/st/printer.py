"""Canonical text rendering of a parsed unit.

Printing a tree, parsing the output and printing again yields the same text,
which is how the fixture corpus checks that nothing is lost by the parser.
"""
from __future__ import annotations

from . import ast

INDENT = "    "


def _name(name: str, hashed: bool = False, quoted: bool = False) -> str:
    if quoted:
        return f'"{name}"'
    if hashed:
        return f"#{name}"
    return name


def expr(e: ast.Expr | None) -> str:
    if e is None:
        return ""
    if isinstance(e, ast.Literal):
        return e.text.upper() if e.kind == "BOOL" else e.text
    if isinstance(e, ast.Name):
        return _name(e.name, e.hashed, e.quoted)
    if isinstance(e, ast.Member):
        return f"{expr(e.base)}.{e.member}"
    if isinstance(e, ast.Index):
        return f"{expr(e.base)}[{', '.join(expr(i) for i in e.indices)}]"
    if isinstance(e, ast.Call):
        return f"{expr(e.func)}({', '.join(arg(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        if e.op == "NOT":
            return f"NOT {expr(e.operand)}"
        return f"{e.op}{expr(e.operand)}"
    if isinstance(e, ast.Binary):
        return f"{expr(e.left)} {e.op} {expr(e.right)}"
    if isinstance(e, ast.Paren):
        return f"({expr(e.inner)})"
    if isinstance(e, ast.ArrayInit):
        parts = [f"{expr(c)}({expr(v)})" if c is not None else expr(v) for c, v in e.items]
        return f"[{', '.join(parts)}]"
    if isinstance(e, ast.StructInit):
        return "(" + ", ".join(f"{k} := {expr(v)}" for k, v in e.fields) + ")"
    if isinstance(e, ast.Unsupported):
        return e.text
    raise TypeError(f"cannot print {type(e).__name__}")


def arg(a: ast.Arg) -> str:
    if a.name is None:
        return expr(a.value)
    return f"{a.name} {'=>' if a.output else ':='} {expr(a.value)}"


def type_ref(t: ast.TypeRef) -> str:
    if t.name == "ARRAY" and t.elem is not None:
        dims = ", ".join(f"{expr(lo)}..{expr(hi)}" for lo, hi in t.dims)
        return f"ARRAY[{dims}] OF {type_ref(t.elem)}"
    text = _name(t.name, quoted=t.quoted)
    if t.length is not None:
        if isinstance(t.length, ast.Paren):
            text += f"({expr(t.length.inner)})"
        else:
            text += f"[{expr(t.length)}]"
    return text


def _block(stmts: list[ast.Stmt], depth: int, out: list[str]) -> None:
    for s in stmts:
        stmt(s, depth, out)


def _case_label(label: ast.CaseLabel) -> str:
    if label.high is None:
        return expr(label.low)
    return f"{expr(label.low)}..{expr(label.high)}"


def stmt(s: ast.Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, ast.Assign):
        out.append(f"{pad}{expr(s.target)} := {expr(s.value)};")
    elif isinstance(s, ast.CallStmt):
        out.append(f"{pad}{expr(s.call)};")
    elif isinstance(s, ast.If):
        for i, (cond, body) in enumerate(s.branches):
            out.append(f"{pad}{'IF' if i == 0 else 'ELSIF'} {expr(cond)} THEN")
            _block(body, depth + 1, out)
        if s.else_body is not None:
            out.append(f"{pad}ELSE")
            _block(s.else_body, depth + 1, out)
        out.append(f"{pad}END_IF;")
    elif isinstance(s, ast.Case):
        out.append(f"{pad}CASE {expr(s.selector)} OF")
        for labels, body in s.clauses:
            out.append(f"{pad}{INDENT}{', '.join(_case_label(l) for l in labels)}:")
            _block(body, depth + 2, out)
        if s.else_body is not None:
            out.append(f"{pad}ELSE")
            _block(s.else_body, depth + 1, out)
        out.append(f"{pad}END_CASE;")
    elif isinstance(s, ast.For):
        step = f" BY {expr(s.step)}" if s.step is not None else ""
        out.append(f"{pad}FOR {expr(s.var)} := {expr(s.start)} TO {expr(s.stop)}{step} DO")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}END_FOR;")
    elif isinstance(s, ast.While):
        out.append(f"{pad}WHILE {expr(s.cond)} DO")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}END_WHILE;")
    elif isinstance(s, ast.Repeat):
        out.append(f"{pad}REPEAT")
        _block(s.body, depth + 1, out)
        out.append(f"{pad}UNTIL {expr(s.cond)}")
        out.append(f"{pad}END_REPEAT;")
    elif isinstance(s, ast.Exit):
        out.append(f"{pad}EXIT;")
    elif isinstance(s, ast.Continue):
        out.append(f"{pad}CONTINUE;")
    elif isinstance(s, ast.Return):
        out.append(f"{pad}RETURN;")
    elif isinstance(s, ast.Empty):
        out.append(f"{pad};")
    elif isinstance(s, ast.Region):
        out.append(f"{pad}REGION {s.name}".rstrip())
        _block(s.body, depth + 1, out)
        out.append(f"{pad}END_REGION")
    elif isinstance(s, ast.Label):
        out.append(f"{pad}{s.name}:")
    elif isinstance(s, ast.Goto):
        out.append(f"{pad}GOTO {s.label};")
    elif isinstance(s, ast.UnsupportedStmt):
        out.append(f"{pad}{s.text};")
    else:
        raise TypeError(f"cannot print {type(s).__name__}")


def pretty(unit: ast.Unit) -> str:
    out: list[str] = []
    header = f"{unit.kind} {_name(unit.name, quoted=unit.quoted)}"
    if unit.return_type is not None:
        header += f" : {type_ref(unit.return_type)}"
    out.append(header)
    if unit.version is not None:
        out.append(f"VERSION : {unit.version}")
    for section in unit.sections:
        head = section.kind
        if section.constant:
            head += " CONSTANT"
        if section.retain:
            head += " RETAIN"
        out.append(head)
        for d in section.decls:
            names = ", ".join(_name(n) for n, _ in d.names)
            line = f"{INDENT}{names} : {type_ref(d.type)}"
            if d.init is not None:
                line += f" := {expr(d.init)}"
            out.append(line + ";")
        out.append("END_VAR")
    if unit.has_begin:
        out.append("BEGIN")
    _block(unit.body, 1, out)
    out.append(f"END_{unit.kind}")
    return "\n".join(out) + "\n"
