"""Semantic checks over a parsed unit, each finding mapped to one diagnostic class.

Class assignment:

* UNDEFINED: undeclared identifiers (every occurrence), unknown members,
  undefined GOTO labels, and declarations whose initializer is invalid. A
  failed declaration is reported once; later uses of that variable stay quiet.
* CALL: unknown functions, wrong argument counts, parameters not in the
  signature, calling something that is not callable.
* TYPE_CONVERSION: assignments or arguments that need an explicit conversion
  under the dialect's widening table, malformed conversion names, operator
  operand mismatches and non-BOOL conditions.
* OTHER: redefinitions, invalid types, unused labels, EXIT/CONTINUE outside
  a loop, writes to constants, reserved words used as names.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import ast
from .diagnostics import CALL, DECLARATION, IMPLEMENTATION, MISMATCH, OTHER, TYPE_CONVERSION, UNDEFINED, Diagnostic
from .dialect import DialectProfile, Signature
from .parser import RawDiag, parse
from .types import (
    BITS, DURATIONS, INT_LIT, NUMERIC, REAL_LIT, REALS, UNKNOWN, VOID, ArrayType, FbType, StructType, TypeRules,
    generic_accepts, is_generic, is_integer, is_numeric, show, split_conversion,
)

COMPARISONS = frozenset({"=", "<>", "<", ">", "<=", ">="})
LOGICAL = frozenset({"AND", "OR", "XOR", "&"})
JOIN_ORDER = ("SINT", "USINT", "INT", "UINT", "DINT", "UDINT", "LINT", "ULINT", "REAL", "LREAL",
              "BYTE", "WORD", "DWORD", "LWORD")
DATE_TIME_POINTS = frozenset({"TOD", "TIME_OF_DAY", "DT", "DATE_AND_TIME", "DATE"})


@dataclass
class Symbol:
    name: str
    type: object
    section: str
    constant: bool = False
    failed: bool = False


def _span(node: ast.Node) -> tuple[tuple[int, int], tuple[int, int]]:
    end = node.end if node.end >= node.pos else node.pos
    return node.pos, end


class Checker:
    def __init__(self, unit: ast.Unit, dialect: DialectProfile, apilib=None):
        self.unit = unit
        self.dialect = dialect
        self.apilib = apilib
        self.rules = TypeRules(dialect)
        self.symbols: dict[str, Symbol] = {}
        self.diags: list[RawDiag] = []
        self.loop_depth = 0
        self.labels: dict[str, ast.Label] = {}
        self.goto_targets: set[str] = set()
        self.return_type = None

    # -- reporting ---------------------------------------------------------

    def report(self, node: ast.Node, diag_class: str, code: str, message: str) -> None:
        start, end = _span(node)
        self.diags.append(RawDiag(code, message, diag_class, start, end))

    # -- type resolution ---------------------------------------------------

    def lookup_signature(self, name: str) -> Signature | None:
        sig = self.dialect.builtin_map.get(name.upper())
        if sig is not None:
            return sig
        if self.apilib is not None and name in self.apilib:
            entry = self.apilib[name]
            return Signature(entry.name, entry.kind, tuple(entry.params), entry.return_type)
        return None

    def resolve_type_name(self, name: str):
        up = name.upper()
        if up in self.dialect.elementary_types:
            return up
        if up in self.dialect.complex_types:
            members = self.dialect.struct_types.get(up)
            if members:
                return StructType(up, tuple(members.items()))
            return up
        sig = self.lookup_signature(name)
        if sig is not None and sig.kind == "FUNCTION_BLOCK":
            return FbType(sig.name, sig)
        return None

    def param_type(self, text: str | None):
        """Loose reading of a signature's type string; unknown forms accept anything."""
        if not text:
            return UNKNOWN
        up = text.strip().upper()
        if up.startswith("ARRAY"):
            return ArrayType(UNKNOWN)
        if is_generic(up):
            return up
        for prefix in ("STRING", "WSTRING"):
            if up.startswith(prefix + "[") or up.startswith(prefix + "("):
                return prefix
        resolved = self.resolve_type_name(text.strip())
        return resolved if resolved is not None else UNKNOWN

    def const_int(self, e: ast.Expr) -> bool:
        if isinstance(e, ast.Literal):
            return e.kind == "INT"
        if isinstance(e, ast.Unary) and e.op in ("-", "+"):
            return self.const_int(e.operand)
        if isinstance(e, ast.Paren):
            return self.const_int(e.inner)
        if isinstance(e, ast.Binary) and e.op in ("+", "-", "*", "/", "MOD"):
            return self.const_int(e.left) and self.const_int(e.right)
        if isinstance(e, ast.Name):
            sym = self.symbols.get(e.name.upper())
            return sym is not None and sym.constant and (sym.failed or is_integer(sym.type))
        return False

    def resolve_type_ref(self, t: ast.TypeRef):
        """Returns (type, ok). Problems are reported here as OTHER."""
        if t.unsupported:
            return UNKNOWN, False
        if t.name == "ARRAY" and t.elem is not None:
            for lo, hi in t.dims:
                for bound in (lo, hi):
                    if not self.const_int(bound):
                        self.report(bound, OTHER, "invalid-array-bound", "array bounds must be constant integers")
                        return UNKNOWN, False
            elem, ok = self.resolve_type_ref(t.elem)
            return ArrayType(elem, len(t.dims)), ok
        resolved = self.resolve_type_name(t.name)
        if resolved is None:
            self.report(t, OTHER, "invalid-type", f"unknown data type '{t.name}'")
            return UNKNOWN, False
        if t.length is not None:
            length = t.length.inner if isinstance(t.length, ast.Paren) else t.length
            if resolved not in ("STRING", "WSTRING"):
                self.report(t, OTHER, "invalid-type", f"type '{t.name}' does not take a length")
                return UNKNOWN, False
            if not self.const_int(length):
                self.report(length, OTHER, "invalid-type", "string length must be a constant integer")
                return UNKNOWN, False
        return resolved, True

    # -- declarations ------------------------------------------------------

    def declare_all(self) -> None:
        unit = self.unit
        if unit.kind == "FUNCTION" and unit.return_type is not None:
            rt, ok = self.resolve_type_ref(unit.return_type)
            self.return_type = rt if ok else UNKNOWN
            if ok and isinstance(rt, FbType):
                self.report(unit.return_type, OTHER, "invalid-type", "a FUNCTION cannot return a function block")
                self.return_type = UNKNOWN
        reserved = self.dialect.reserved_words
        for section in unit.sections:
            for decl in section.decls:
                vtype, ok = self.resolve_type_ref(decl.type)
                new_syms = []
                for name, pos in decl.names:
                    up = name.upper()
                    name_node = ast.Name(name, pos=pos, end=(pos[0], pos[1] + len(name)))
                    if up in reserved:
                        self.report(name_node, OTHER, "reserved-word", f"reserved word '{name}' used as a variable name")
                    if up in self.symbols or (unit.kind == "FUNCTION" and up == unit.name.upper()):
                        self.report(name_node, OTHER, "redefinition", f"redefinition of '{name}'")
                        continue
                    sym = Symbol(name, vtype, section.kind, section.constant, failed=not ok)
                    self.symbols[up] = sym
                    new_syms.append(sym)
                if decl.init is not None and ok and new_syms:
                    if not self.initializer_ok(decl.init, vtype):
                        names = ", ".join(s.name for s in new_syms)
                        self.report(decl.init, UNDEFINED, "invalid-initializer",
                                    f"'{names}' could not be declared: invalid initial value for type {show(vtype)}")
                        for sym in new_syms:
                            sym.failed = True
                elif section.constant and decl.init is None and ok:
                    self.report(decl, OTHER, "missing-constant-value", "a CONSTANT declaration needs an initial value")

    def initializer_ok(self, init: ast.Expr, vtype) -> bool:
        saved = self.diags
        self.diags = []
        try:
            ok = self._init_ok(init, vtype)
            return ok and not self.diags
        finally:
            self.diags = saved

    def _init_ok(self, init: ast.Expr, vtype) -> bool:
        if isinstance(init, ast.ArrayInit):
            if not isinstance(vtype, ArrayType):
                return vtype == UNKNOWN
            for count, value in init.items:
                if count is not None and not self.const_int(count):
                    return False
                if not self._init_ok(value, vtype.elem):
                    return False
            return True
        if isinstance(init, ast.StructInit):
            for field_name, value in init.fields:
                if isinstance(vtype, StructType):
                    ftype = vtype.member(field_name)
                elif isinstance(vtype, FbType):
                    p = vtype.signature.param(field_name)
                    ftype = self.param_type(p.type_name) if p is not None and p.direction != "OUT" else None
                else:
                    return vtype == UNKNOWN
                if ftype is None or not self._init_ok(value, ftype):
                    return False
            return True
        if isinstance(vtype, FbType):
            return False
        return self.rules.assignable(self.typeof(init), vtype)

    # -- expressions -------------------------------------------------------

    def join(self, a, b):
        u = self.rules.unify(a, b)
        if u is not None:
            return u
        for t in JOIN_ORDER:
            if self.rules.assignable(a, t) and self.rules.assignable(b, t):
                return t
        return None

    def typeof(self, e: ast.Expr):
        method = getattr(self, f"_t_{type(e).__name__.lower()}")
        return method(e)

    def _t_literal(self, e: ast.Literal):
        if e.kind == "INT":
            return INT_LIT
        if e.kind == "REAL":
            return REAL_LIT
        if e.kind in ("BOOL", "STRING", "WSTRING"):
            return e.lit_type or e.kind
        if e.kind == "TYPED" and e.lit_type:
            lt = e.lit_type.upper()
            if lt in self.dialect.elementary_types or lt in self.dialect.complex_types:
                return lt
        return UNKNOWN

    def _t_name(self, e: ast.Name):
        if e.hashed and not self.dialect.allows("hash_prefix"):
            self.report(e, MISMATCH, "invalid-symbol", f"'#' prefix on '{e.name}' is not valid in this dialect")
        sym = self.symbols.get(e.name.upper())
        if sym is not None:
            return UNKNOWN if sym.failed else sym.type
        if self.unit.kind == "FUNCTION" and e.name.upper() == self.unit.name.upper():
            return self.return_type if self.return_type is not None else UNKNOWN
        self.report(e, UNDEFINED, "undefined-identifier", f"undefined identifier '{e.name}'")
        return UNKNOWN

    def _t_member(self, e: ast.Member):
        base = self.typeof(e.base)
        if base == UNKNOWN:
            return UNKNOWN
        if isinstance(base, FbType):
            p = base.signature.param(e.member)
            if p is not None:
                return self.param_type(p.type_name)
        elif isinstance(base, StructType):
            t = base.member(e.member)
            if t is not None:
                return self.param_type(t)
        self.report(e, UNDEFINED, "undefined-member", f"'{show(base)}' has no member '{e.member}'")
        return UNKNOWN

    def _t_index(self, e: ast.Index):
        base = self.typeof(e.base)
        for idx in e.indices:
            it = self.typeof(idx)
            if it != UNKNOWN and not is_integer(it):
                self.report(idx, TYPE_CONVERSION, "invalid-index", f"array index must be an integer, got {show(it)}")
        if base == UNKNOWN:
            return UNKNOWN
        if isinstance(base, ArrayType):
            return base.elem
        if base in ("STRING", "WSTRING"):
            return "BYTE" if base == "STRING" else "WORD"
        self.report(e, OTHER, "invalid-variable", f"'{show(base)}' value cannot be indexed")
        return UNKNOWN

    def _t_paren(self, e: ast.Paren):
        return self.typeof(e.inner)

    def _t_arrayinit(self, e: ast.ArrayInit):
        for _, value in e.items:
            self.typeof(value)
        return UNKNOWN

    def _t_structinit(self, e: ast.StructInit):
        for _, value in e.fields:
            self.typeof(value)
        return UNKNOWN

    def _t_unsupported(self, e: ast.Unsupported):
        return UNKNOWN

    def _t_unary(self, e: ast.Unary):
        t = self.typeof(e.operand)
        if t == UNKNOWN:
            return UNKNOWN
        if e.op == "NOT":
            if t == "BOOL" or t in BITS or t == INT_LIT:
                return t
        elif is_numeric(t) or t in DURATIONS:
            return t
        self.report(e, TYPE_CONVERSION, "invalid-operand", f"operator {e.op} cannot be applied to {show(t)}")
        return UNKNOWN

    def _t_binary(self, e: ast.Binary):
        lt, rt = self.typeof(e.left), self.typeof(e.right)
        op = e.op
        if op in COMPARISONS:
            if UNKNOWN not in (lt, rt):
                u = self.join(lt, rt)
                if u is None or isinstance(u, (FbType, ArrayType, StructType)):
                    self.report(e, TYPE_CONVERSION, "incompatible-operands",
                                f"cannot compare {show(lt)} with {show(rt)}")
            return "BOOL"
        if UNKNOWN in (lt, rt):
            return UNKNOWN
        result = self._binary_result(op, lt, rt)
        if result is None:
            self.report(e, TYPE_CONVERSION, "incompatible-operands",
                        f"operator {op} cannot combine {show(lt)} and {show(rt)}")
            return UNKNOWN
        return result

    def _binary_result(self, op, lt, rt):
        if op in LOGICAL:
            if lt == "BOOL" and rt == "BOOL":
                return "BOOL"
            u = self.join(lt, rt)
            return u if u in BITS or u == INT_LIT else None
        if op == "MOD":
            return self.join(lt, rt) if is_integer(lt) and is_integer(rt) else None
        if op == "**":
            if not (is_numeric(lt) and is_numeric(rt)):
                return None
            if lt == "LREAL" or rt == "LREAL":
                return "LREAL"
            return REAL_LIT if lt in (INT_LIT, REAL_LIT) and rt in (INT_LIT, REAL_LIT) else "REAL"
        if lt in DURATIONS or rt in DURATIONS:
            if op in ("+", "-") and lt in DURATIONS and rt in DURATIONS:
                return self.join(lt, rt)
            if op in ("*", "/") and lt in DURATIONS and is_numeric(rt):
                return lt
            if op == "*" and rt in DURATIONS and is_numeric(lt):
                return rt
            if op in ("+", "-") and lt in DATE_TIME_POINTS and rt in DURATIONS:
                return lt
            return None
        if lt in DATE_TIME_POINTS and rt in DATE_TIME_POINTS and op == "-" and lt == rt:
            return "TIME"
        if is_numeric(lt) and is_numeric(rt):
            u = self.join(lt, rt)
            return u if u is not None and (is_numeric(u)) else None
        return None

    def _t_call(self, e: ast.Call):
        f = e.func
        if isinstance(f, ast.Name):
            sym = self.symbols.get(f.name.upper())
            if sym is not None:
                if f.hashed and not self.dialect.allows("hash_prefix"):
                    self.report(f, MISMATCH, "invalid-symbol", f"'#' prefix on '{f.name}' is not valid in this dialect")
                if sym.failed:
                    self.walk_args(e)
                    return UNKNOWN
                if isinstance(sym.type, FbType):
                    return self.fb_call(e, sym.type)
                self.report(f, CALL, "not-callable", f"'{f.name}' is a variable of type {show(sym.type)}, not a function")
                self.walk_args(e)
                return UNKNOWN
            conv = split_conversion(f.name, self.dialect)
            if conv is not None:
                return self.conversion_call(e, f, conv)
            sig = self.lookup_signature(f.name)
            if sig is not None:
                if sig.kind == "FUNCTION_BLOCK":
                    self.report(f, CALL, "fb-without-instance",
                                f"function block '{sig.name}' must be called through a declared instance")
                    self.walk_args(e)
                    return UNKNOWN
                return self.function_call(e, sig)
            if self.unit.kind == "FUNCTION" and f.name.upper() == self.unit.name.upper():
                self.walk_args(e)
                return self.return_type or UNKNOWN
            self.report(f, CALL, "unknown-function", f"call to unknown function or instruction '{f.name}'")
            self.walk_args(e)
            return UNKNOWN
        t = self.typeof(f)
        if t == UNKNOWN:
            self.walk_args(e)
            return UNKNOWN
        if isinstance(t, FbType):
            return self.fb_call(e, t)
        self.report(f, CALL, "not-callable", f"value of type {show(t)} is not callable")
        self.walk_args(e)
        return UNKNOWN

    def walk_args(self, e: ast.Call) -> None:
        for a in e.args:
            self.typeof(a.value)

    def lvalue_type(self, target: ast.Expr):
        """Type of an assignment/output target; reports non-writable targets."""
        if isinstance(target, ast.Name):
            sym = self.symbols.get(target.name.upper())
            if sym is not None and sym.constant and not sym.failed:
                self.report(target, OTHER, "assign-to-constant", f"cannot assign to constant '{target.name}'")
                return UNKNOWN
            return self.typeof(target)
        if isinstance(target, (ast.Member, ast.Index)):
            return self.typeof(target)
        if isinstance(target, ast.Paren):
            return self.lvalue_type(target.inner)
        self.typeof(target)
        self.report(target, OTHER, "invalid-variable", "left side of ':=' is not a variable")
        return UNKNOWN

    def check_binding(self, call_name: str, param, arg: ast.Arg) -> None:
        ptype = self.param_type(param.type_name)
        if arg.output:
            ttype = self.lvalue_type(arg.value)
            if not self.rules.assignable(ptype, ttype):
                self.report(arg, TYPE_CONVERSION, "argument-type",
                            f"output '{param.name}' of {call_name} is {show(ptype)}, cannot store into {show(ttype)}")
            return
        atype = self.typeof(arg.value)
        if not self.rules.assignable(atype, ptype):
            self.report(arg, TYPE_CONVERSION, "argument-type",
                        f"argument '{param.name}' of {call_name} expects {show(ptype)}, got {show(atype)}")

    def bind_named(self, e: ast.Call, sig: Signature, args) -> list:
        bound = []
        for a in args:
            p = sig.param(a.name)
            if p is None:
                self.report(a, CALL, "unknown-parameter", f"{sig.name} has no parameter '{a.name}'")
                self.typeof(a.value)
                continue
            if a.output != (p.direction == "OUT"):
                kind = "an output; bind it with '=>'" if p.direction == "OUT" else "an input; bind it with ':='"
                self.report(a, CALL, "parameter-direction", f"parameter '{p.name}' of {sig.name} is {kind}")
                self.typeof(a.value)
                continue
            bound.append((p, a))
        return bound

    def fb_call(self, e: ast.Call, fb: FbType):
        positional = [a for a in e.args if a.name is None]
        if positional:
            self.report(positional[0], CALL, "positional-fb-argument",
                        f"function block {fb.name} must be called with named parameters")
            for a in positional:
                self.typeof(a.value)
        for p, a in self.bind_named(e, fb.signature, [a for a in e.args if a.name is not None]):
            self.check_binding(fb.name, p, a)
        return VOID

    def function_call(self, e: ast.Call, sig: Signature):
        inputs = list(sig.inputs)
        positional = [a for a in e.args if a.name is None]
        named = [a for a in e.args if a.name is not None]
        pairs = []
        arity_bad = False
        for i, a in enumerate(positional):
            if i < len(inputs):
                pairs.append((inputs[i], a))
            elif sig.variadic and inputs:
                pairs.append((inputs[-1], a))
            else:
                arity_bad = True
                self.typeof(a.value)
        bound_named = self.bind_named(e, sig, named)
        pairs.extend(bound_named)
        supplied = {p.name.upper() for p, a in pairs if p.direction != "OUT"}
        missing = [p for p in inputs if p.name.upper() not in supplied]
        if arity_bad or missing:
            given = len([a for a in e.args if not a.output])
            self.report(e, CALL, "wrong-arity",
                        f"{sig.name} expects {len(inputs)}{' or more' if sig.variadic else ''} arguments, got {given}")
        # Generic parameters must agree with each other.
        generic_types: dict[str, object] = {}
        for p, a in pairs:
            ptype = p.type_name.upper()
            if not is_generic(ptype) or a.output:
                self.check_binding(sig.name, p, a)
                continue
            atype = self.typeof(a.value)
            if not generic_accepts(ptype, atype) and atype not in self.rules.wildcards:
                self.report(a, TYPE_CONVERSION, "argument-type",
                            f"argument '{p.name}' of {sig.name} expects {ptype}, got {show(atype)}")
                continue
            if ptype in generic_types:
                joined = self.join(generic_types[ptype], atype)
                if joined is None:
                    self.report(a, TYPE_CONVERSION, "argument-type",
                                f"arguments of {sig.name} have incompatible types "
                                f"{show(generic_types[ptype])} and {show(atype)}")
                    continue
                generic_types[ptype] = joined
            else:
                generic_types[ptype] = atype
        rt = sig.return_type
        if not rt:
            return VOID
        if is_generic(rt.upper()):
            return generic_types.get(rt.upper(), UNKNOWN)
        return self.param_type(rt)

    def conversion_call(self, e: ast.Call, f: ast.Name, conv):
        src, dst = conv
        if src is None and self.dialect.conversion_requires_source:
            self.report(f, TYPE_CONVERSION, "malformed-conversion",
                        f"conversion '{f.name}' needs an explicit source type in this dialect (<SRC>_TO_{dst})")
            self.walk_args(e)
            return dst
        inputs = [a for a in e.args if not a.output]
        if len(e.args) != 1 or (inputs and inputs[0].name is not None and inputs[0].name.upper() != "IN"):
            self.report(e, CALL, "wrong-arity", f"{f.name.upper()} expects exactly 1 argument, got {len(e.args)}")
            self.walk_args(e)
            return dst
        atype = self.typeof(e.args[0].value)
        if src is not None and not self.rules.assignable(atype, src) and atype not in self.rules.wildcards:
            self.report(e.args[0], TYPE_CONVERSION, "conversion-source",
                        f"{f.name.upper()} expects {src}, got {show(atype)}")
        elif src is None and isinstance(atype, (FbType, ArrayType, StructType)):
            self.report(e.args[0], TYPE_CONVERSION, "conversion-source",
                        f"{f.name.upper()} cannot convert {show(atype)}")
        return dst

    # -- statements --------------------------------------------------------

    def condition(self, cond: ast.Expr, what: str) -> None:
        t = self.typeof(cond)
        if t not in ("BOOL", UNKNOWN):
            self.report(cond, TYPE_CONVERSION, "non-bool-condition", f"{what} condition must be BOOL, got {show(t)}")

    def collect_labels(self, stmts) -> None:
        for s in stmts:
            if isinstance(s, ast.Label):
                if s.name.upper() in self.labels:
                    self.report(s, OTHER, "redefinition", f"label '{s.name}' is defined more than once")
                else:
                    self.labels[s.name.upper()] = s
            for child in _child_bodies(s):
                self.collect_labels(child)

    def block(self, stmts) -> None:
        for s in stmts:
            self.statement(s)

    def statement(self, s: ast.Stmt) -> None:
        if isinstance(s, ast.Assign):
            ttype = self.lvalue_type(s.target)
            vtype = self.typeof(s.value)
            if isinstance(ttype, FbType) or (not self.rules.assignable(vtype, ttype)):
                self.report(s, TYPE_CONVERSION, "assignment-type",
                            f"cannot assign {show(vtype)} to {show(ttype)} without an explicit conversion")
        elif isinstance(s, ast.CallStmt):
            self.typeof(s.call)
        elif isinstance(s, ast.If):
            for cond, body in s.branches:
                self.condition(cond, "IF")
                self.block(body)
            if s.else_body is not None:
                self.block(s.else_body)
        elif isinstance(s, ast.Case):
            sel = self.typeof(s.selector)
            if sel != UNKNOWN and not is_integer(sel) and sel not in BITS:
                self.report(s.selector, TYPE_CONVERSION, "case-selector",
                            f"CASE selector must be an integer, got {show(sel)}")
                sel = UNKNOWN
            for labels, body in s.clauses:
                for label in labels:
                    for bound in (label.low, label.high):
                        if bound is None:
                            continue
                        lt = self.typeof(bound)
                        if UNKNOWN not in (lt, sel) and self.join(lt, sel) is None:
                            self.report(bound, TYPE_CONVERSION, "case-label",
                                        f"CASE label of type {show(lt)} does not match selector {show(sel)}")
                self.block(body)
            if s.else_body is not None:
                self.block(s.else_body)
        elif isinstance(s, ast.For):
            vt = self.lvalue_type(s.var)
            if vt != UNKNOWN and not is_integer(vt):
                self.report(s.var, TYPE_CONVERSION, "loop-variable",
                            f"FOR loop variable must be an integer, got {show(vt)}")
                vt = UNKNOWN
            for part in (s.start, s.stop, s.step):
                if part is None:
                    continue
                pt = self.typeof(part)
                if not self.rules.assignable(pt, vt) and self.join(pt, vt) is None:
                    self.report(part, TYPE_CONVERSION, "loop-bound", f"FOR bound of type {show(pt)} does not match {show(vt)}")
            self.loop(s.body)
        elif isinstance(s, ast.While):
            self.condition(s.cond, "WHILE")
            self.loop(s.body)
        elif isinstance(s, ast.Repeat):
            self.loop(s.body)
            self.condition(s.cond, "UNTIL")
        elif isinstance(s, (ast.Exit, ast.Continue)):
            if self.loop_depth == 0:
                word = "EXIT" if isinstance(s, ast.Exit) else "CONTINUE"
                self.report(s, OTHER, "outside-loop", f"{word} outside of a loop")
        elif isinstance(s, ast.Region):
            self.block(s.body)
        elif isinstance(s, ast.Goto):
            if s.label.upper() not in self.labels:
                self.report(s, UNDEFINED, "undefined-label", f"undefined label '{s.label}'")
            self.goto_targets.add(s.label.upper())

    def loop(self, body) -> None:
        self.loop_depth += 1
        try:
            self.block(body)
        finally:
            self.loop_depth -= 1

    def run(self) -> list[RawDiag]:
        self.declare_all()
        self.collect_labels(self.unit.body)
        self.block(self.unit.body)
        for key, label in self.labels.items():
            if key not in self.goto_targets:
                self.report(label, OTHER, "unused-label", f"label '{label.name}' is never used")
        return self.diags


def _child_bodies(s: ast.Stmt):
    if isinstance(s, ast.If):
        yield from (body for _, body in s.branches)
        if s.else_body is not None:
            yield s.else_body
    elif isinstance(s, ast.Case):
        yield from (body for _, body in s.clauses)
        if s.else_body is not None:
            yield s.else_body
    elif isinstance(s, (ast.For, ast.While, ast.Repeat, ast.Region)):
        yield s.body


def to_diagnostics(raw: list[RawDiag], decl_end: tuple[int, int], source: str | None = None) -> list[Diagnostic]:
    """Tag sections by position relative to the declaration boundary, clamp spans, sort by position."""
    lines = source.split("\n") if source is not None else None

    def clamp(pos):
        line, col = pos
        if lines is None:
            return max(1, line), max(1, col)
        line = min(max(1, line), len(lines))
        col = min(max(1, col), len(lines[line - 1]) + 1)
        return line, col

    out = []
    for d in raw:
        start = clamp(d.start)
        end = clamp(d.end)
        if end < start:
            end = start
        section = DECLARATION if d.start < decl_end else IMPLEMENTATION
        out.append(Diagnostic(d.code, d.message, start[0], start[1], end[0], end[1], section, d.diag_class))
    out.sort(key=lambda d: (d.line, d.col))
    return out


def check(unit: ast.Unit, dialect: DialectProfile, apilib=None, source: str | None = None) -> list[Diagnostic]:
    """Semantic diagnostics only (syntax diagnostics come from ``parse``)."""
    return to_diagnostics(Checker(unit, dialect, apilib).run(), unit.decl_end, source)


@dataclass
class Analysis:
    unit: ast.Unit
    diagnostics: list[Diagnostic]


def analyze(source: str, dialect: DialectProfile, apilib=None) -> Analysis:
    """Parse and check ``source``; syntax and semantic diagnostics merged in source order."""
    unit, syntax = parse(source, dialect)
    semantic = Checker(unit, dialect, apilib).run()
    return Analysis(unit, to_diagnostics(syntax + semantic, unit.decl_end, source))
