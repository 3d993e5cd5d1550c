"""Recursive-descent parser for one ST program unit with statement-level recovery.

Operator precedence, lowest first::

    OR < XOR < AND/& < = <> < > <= >= < + - < * / MOD < unary NOT - < **

Structural problems (unclosed blocks, stray END_ keywords, unbalanced
parentheses, missing separators) are MISMATCH diagnostics. Constructs outside
the supported subset (pointers, methods, direct addresses, ...) yield a single
OTHER "unsupported construct" diagnostic each.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import ast
from .diagnostics import MISMATCH, OTHER
from .dialect import DialectProfile
from .lexer import Token, tokenize_st

VAR_KEYWORDS = ("VAR_INPUT", "VAR_OUTPUT", "VAR_IN_OUT", "VAR", "VAR_TEMP", "VAR_GLOBAL", "VAR_STAT")
UNIT_END = {"FUNCTION_BLOCK": "END_FUNCTION_BLOCK", "FUNCTION": "END_FUNCTION", "PROGRAM": "END_PROGRAM"}
CLOSERS = frozenset({
    "END_IF", "ELSIF", "ELSE", "END_CASE", "END_FOR", "END_WHILE", "UNTIL", "END_REPEAT",
    "END_REGION", "END_FUNCTION_BLOCK", "END_FUNCTION", "END_PROGRAM", "END_VAR",
})
STATEMENT_START = frozenset({"IF", "CASE", "FOR", "WHILE", "REPEAT", "EXIT", "CONTINUE", "RETURN", "REGION", "GOTO", "JMP"})
UNSUPPORTED_BLOCKS = {"METHOD": "END_METHOD", "PROPERTY": "END_PROPERTY", "ACTION": "END_ACTION",
                      "INTERFACE": "END_INTERFACE", "STRUCT": "END_STRUCT", "TYPE": "END_TYPE"}
COMPARISON = ("=", "<>", "<", ">", "<=", ">=")
CASE_FRAME = "<case-labels>"


@dataclass(frozen=True)
class RawDiag:
    code: str
    message: str
    diag_class: str
    start: tuple[int, int]
    end: tuple[int, int]


class ParseError(Exception):
    def __init__(self, message: str, tok: Token, code: str = "unexpected-token", diag_class: str = MISMATCH):
        super().__init__(message)
        self.message = message
        self.tok = tok
        self.code = code
        self.diag_class = diag_class


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.value if tok.kind != "STRING" else tok.value[:20])


class Parser:
    def __init__(self, source: str, dialect: DialectProfile | None = None):
        self.source = source
        self.dialect = dialect
        self.toks, lex_errors = tokenize_st(source)
        self.i = 0
        self.diags: list[RawDiag] = []
        self.frames: list[frozenset[str]] = []
        for e in lex_errors:
            self.diags.append(RawDiag("lexical-error", e.message, MISMATCH, (e.line, e.col), (e.end_line, e.end_col)))

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        j = self.i + k
        while j < len(self.toks) and self.toks[j].kind == "ERROR":
            j += 1
        return self.toks[min(j, len(self.toks) - 1)]

    def advance(self) -> Token:
        while self.toks[self.i].kind == "ERROR":
            self.i += 1
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at_kw(self, *words: str) -> bool:
        return self.peek().is_kw(*words)

    def at_op(self, *ops: str) -> bool:
        return self.peek().is_op(*ops)

    def prev_end(self) -> tuple[int, int]:
        j = self.i - 1
        while j >= 0 and self.toks[j].kind == "ERROR":
            j -= 1
        if j < 0:
            return (1, 1)
        return (self.toks[j].end_line, self.toks[j].end_col)

    def diag(self, code: str, message: str, start: tuple[int, int], end: tuple[int, int] | None = None,
             diag_class: str = MISMATCH) -> None:
        self.diags.append(RawDiag(code, message, diag_class, start, end or start))

    def diag_tok(self, tok: Token, code: str, message: str, diag_class: str = MISMATCH) -> None:
        self.diag(code, message, (tok.line, tok.col), (tok.end_line, tok.end_col), diag_class)

    def unsupported(self, tok: Token, what: str, end: tuple[int, int] | None = None) -> None:
        self.diag("unsupported-construct", f"unsupported construct: {what}", (tok.line, tok.col),
                  end or (tok.end_line, tok.end_col), OTHER)

    def expect_op(self, op: str, message: str | None = None) -> Token:
        tok = self.peek()
        if not tok.is_op(op):
            if op == ")":
                raise ParseError(message or f"unbalanced parentheses: expected ')' before {_describe(tok)}", tok,
                                 "unbalanced-parentheses")
            raise ParseError(message or f"expected {op!r} but found {_describe(tok)}", tok)
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if not tok.is_kw(word):
            raise ParseError(f"expected {word} but found {_describe(tok)}", tok)
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(f"expected {what} but found {_describe(tok)}", tok)
        return self.advance()

    def expect_semicolon(self) -> None:
        """Missing ';' is reported without aborting the statement.

        If the offending token sits on the same line, the rest of that
        statement is skipped (it is garbage such as an extra ')').
        """
        tok = self.peek()
        if tok.is_op(";"):
            self.advance()
            return
        prev = self.prev_end()
        if tok.is_op(")"):
            self.diag_tok(tok, "unbalanced-parentheses", "unbalanced parentheses: unexpected ')'")
        else:
            self.diag("missing-semicolon", f"expected ';' before {_describe(tok)}", prev,
                      (tok.line, tok.col) if tok.kind != "EOF" else prev)
        if tok.kind != "EOF" and tok.line == prev[0]:
            self.skip_statement()

    def optional_semicolon(self) -> None:
        if self.at_op(";"):
            self.advance()

    def in_frames(self, tok: Token) -> bool:
        return tok.kind == "KEYWORD" and any(tok.value in f for f in self.frames)

    def case_context(self) -> bool:
        return any(CASE_FRAME in f for f in self.frames)

    def skip_statement(self) -> None:
        """Skip to just past the next ';', stopping early at block keywords."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return
            if depth == 0 and tok.kind == "KEYWORD" and (tok.value in CLOSERS or tok.value in STATEMENT_START
                                                         or tok.value in ("THEN", "DO", "OF")):
                return
            if tok.is_op("("):
                depth += 1
            elif tok.is_op(")"):
                depth = max(0, depth - 1)
            self.advance()
            if tok.is_op(";"):
                return

    def skip_to(self, *words: str) -> None:
        while not self.at_kw(*words) and self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "KEYWORD" and (tok.value in CLOSERS or tok.value in STATEMENT_START):
                return
            self.advance()

    def skip_block(self, closer: str) -> None:
        while self.peek().kind != "EOF" and not self.at_kw(closer):
            self.advance()
        if self.at_kw(closer):
            self.advance()
            self.optional_semicolon()

    # -- unit --------------------------------------------------------------

    def parse_unit(self) -> ast.Unit:
        tok = self.peek()
        kind = "FUNCTION_BLOCK"
        unit = ast.Unit(kind, "", pos=(tok.line, tok.col))
        if tok.is_kw("FUNCTION_BLOCK", "FUNCTION", "PROGRAM"):
            self.advance()
            kind = tok.value
            if kind == "PROGRAM":
                self.unsupported(tok, "PROGRAM unit")
        else:
            self.diag_tok(tok, "missing-unit-header",
                          f"expected FUNCTION_BLOCK or FUNCTION but found {_describe(tok)}")
            # resynchronise on a header keyword if one exists
            while self.peek().kind != "EOF" and not self.at_kw("FUNCTION_BLOCK", "FUNCTION", *VAR_KEYWORDS):
                self.advance()
            if self.at_kw("FUNCTION_BLOCK", "FUNCTION"):
                kind = self.advance().value
        unit.kind = "FUNCTION_BLOCK" if kind == "PROGRAM" else kind
        name_tok = self.peek()
        if name_tok.kind == "IDENT":
            self.advance()
            unit.name, unit.quoted = name_tok.value, name_tok.quoted
        elif not self.at_kw(*VAR_KEYWORDS):
            self.diag_tok(name_tok, "missing-unit-name", f"expected unit name but found {_describe(name_tok)}")
        if unit.kind == "FUNCTION":
            if self.at_op(":"):
                self.advance()
                try:
                    unit.return_type = self.parse_type()
                except ParseError as exc:
                    self.record(exc)
            else:
                self.diag("missing-return-type", "FUNCTION requires a return type (': <type>')", self.prev_end())
        if self.at_kw("EXTENDS", "IMPLEMENTS"):
            t = self.advance()
            self.unsupported(t, f"{t.value} clause")
            while self.peek().kind in ("IDENT",) or self.at_op(","):
                self.advance()
        if self.at_kw("VERSION"):
            self.advance()
            if self.at_op(":"):
                self.advance()
            v = self.peek()
            if v.kind in ("REAL", "INT"):
                self.advance()
                unit.version = v.value
        self.optional_semicolon()
        unit.decl_end = self.prev_end()
        unit.decl_end_offset = self.toks[self.i - 1].end_offset if self.i else 0
        while self.at_kw(*VAR_KEYWORDS):
            unit.sections.append(self.parse_var_section())
            unit.decl_end = self.prev_end()
            unit.decl_end_offset = self.toks[self.i - 1].end_offset
        if self.at_kw("BEGIN"):
            self.advance()
            unit.has_begin = True
        end_kw = UNIT_END[kind]
        self.frames.append(frozenset({end_kw, *UNIT_END.values()}))
        unit.body = self.parse_statements()
        self.frames.pop()
        end_tok = self.peek()
        if end_tok.is_kw(end_kw):
            self.advance()
            self.optional_semicolon()
        elif end_tok.kind == "EOF":
            self.diag("unclosed-construct", f"{kind} {unit.name} is not closed: missing {end_kw}",
                      unit.pos, self.prev_end())
        else:
            self.diag_tok(end_tok, "mismatched-end", f"expected {end_kw} but found {_describe(end_tok)}")
            self.advance()
        self.parse_trailer()
        unit.end = self.prev_end()
        return unit

    def parse_trailer(self) -> None:
        reported = False
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "KEYWORD" and tok.value in UNSUPPORTED_BLOCKS:
                self.advance()
                self.skip_block(UNSUPPORTED_BLOCKS[tok.value])
                self.unsupported(tok, tok.value.lower(), self.prev_end())
                continue
            if not reported:
                self.diag_tok(tok, "trailing-text", f"unexpected {_describe(tok)} after end of unit")
                reported = True
            self.advance()

    def record(self, exc: ParseError) -> None:
        t = exc.tok
        end = (t.end_line, t.end_col) if t.kind != "EOF" else self.prev_end()
        start = (t.line, t.col) if t.kind != "EOF" else self.prev_end()
        self.diag(exc.code, exc.message, start, end, exc.diag_class)

    # -- declarations ------------------------------------------------------

    def parse_var_section(self) -> ast.VarSection:
        head = self.advance()
        section = ast.VarSection(head.value, [], pos=(head.line, head.col))
        if head.value == "VAR_GLOBAL":
            self.unsupported(head, "VAR_GLOBAL section")
        while self.at_kw("CONSTANT", "RETAIN", "NON_RETAIN"):
            q = self.advance().value
            if q == "CONSTANT":
                section.constant = True
            elif q == "RETAIN":
                section.retain = True
        while True:
            tok = self.peek()
            if tok.is_kw("END_VAR"):
                self.advance()
                self.optional_semicolon()
                break
            if tok.kind == "EOF" or (tok.kind == "KEYWORD" and (tok.value in VAR_KEYWORDS or tok.value in CLOSERS
                                                                 or tok.value in STATEMENT_START or tok.value == "BEGIN")):
                self.diag("unclosed-construct", f"{head.value} section is not closed: missing END_VAR",
                          section.pos, self.prev_end())
                break
            if tok.is_op(";"):
                self.advance()
                continue
            try:
                section.decls.append(self.parse_decl())
            except ParseError as exc:
                self.record(exc)
                self.skip_decl()
        section.end = self.prev_end()
        return section

    def skip_decl(self) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "EOF" or tok.is_kw("END_VAR", *VAR_KEYWORDS):
                return
            if tok.kind == "KEYWORD" and (tok.value in STATEMENT_START or tok.value in CLOSERS):
                return
            self.advance()
            if tok.is_op(";"):
                return

    def parse_decl(self) -> ast.VarDecl:
        first = self.peek()
        names = []
        while True:
            tok = self.expect_ident("variable name")
            names.append((tok.value, (tok.line, tok.col)))
            if self.at_op(","):
                self.advance()
                continue
            break
        if self.at_kw("AT"):
            at = self.advance()
            if self.peek().kind == "ADDRESS":
                self.advance()
            self.unsupported(at, "located variable (AT %...)", self.prev_end())
        self.expect_op(":")
        type_ref = self.parse_type()
        init = None
        if self.at_op(":="):
            self.advance()
            init = self.parse_initializer()
        decl = ast.VarDecl(names, type_ref, init, pos=(first.line, first.col))
        if not self.at_op(";"):
            tok = self.peek()
            raise ParseError(f"expected ';' after declaration but found {_describe(tok)}", tok, "missing-semicolon")
        self.advance()
        decl.end = self.prev_end()
        return decl

    def parse_type(self) -> ast.TypeRef:
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.is_kw("ARRAY"):
            self.advance()
            self.expect_op("[")
            dims = []
            while True:
                if self.at_op("*"):
                    star = self.advance()
                    self.unsupported(star, "variable-length array")
                    dims.append((ast.Literal("INT", "0"), ast.Literal("INT", "0")))
                else:
                    lo = self.parse_expr()
                    self.expect_op("..")
                    hi = self.parse_expr()
                    dims.append((lo, hi))
                if self.at_op(","):
                    self.advance()
                    continue
                break
            self.expect_op("]")
            self.expect_kw("OF")
            elem = self.parse_type()
            return ast.TypeRef("ARRAY", dims=dims, elem=elem, pos=pos, end=self.prev_end())
        if tok.is_kw("POINTER", "REFERENCE"):
            self.advance()
            if self.at_kw("TO"):
                self.advance()
            inner = self.parse_type()
            self.unsupported(tok, f"{tok.value} TO type", self.prev_end())
            return ast.TypeRef(f"{tok.value} TO {inner.name}", unsupported=True, pos=pos, end=self.prev_end())
        if tok.is_kw("STRUCT"):
            self.advance()
            self.skip_block("END_STRUCT")
            self.unsupported(tok, "inline STRUCT", self.prev_end())
            return ast.TypeRef("STRUCT", unsupported=True, pos=pos, end=self.prev_end())
        if tok.kind != "IDENT":
            raise ParseError(f"expected a type but found {_describe(tok)}", tok, "expected-type")
        self.advance()
        name = tok.value if tok.quoted else tok.value.upper() if tok.value.upper() in self._type_words() else tok.value
        ref = ast.TypeRef(name, quoted=tok.quoted, pos=pos)
        if not tok.quoted and tok.value.upper() in ("STRING", "WSTRING") and self.at_op("[", "("):
            closer = "]" if self.advance().value == "[" else ")"
            ref.length = self.parse_expr()
            self.expect_op(closer)
            if closer == ")":
                ref.length = ast.Paren(ref.length)  # remember the bracket style
        ref.end = self.prev_end()
        return ref

    def _type_words(self) -> frozenset[str]:
        base = frozenset({"STRING", "WSTRING", "BOOL", "INT", "DINT", "REAL", "LREAL", "TIME"})
        if self.dialect is None:
            return base
        return base | self.dialect.known_type_names() | frozenset({"VOID"})

    def parse_initializer(self) -> ast.Expr:
        tok = self.peek()
        if tok.is_op("["):
            return self.parse_array_init()
        if tok.is_op("(") and self.peek(1).kind == "IDENT" and self.peek(2).is_op(":="):
            self.advance()
            fields = []
            while True:
                name = self.expect_ident("field name")
                self.expect_op(":=")
                fields.append((name.value, self.parse_initializer()))
                if self.at_op(","):
                    self.advance()
                    continue
                break
            self.expect_op(")")
            return ast.StructInit(fields, pos=(tok.line, tok.col), end=self.prev_end())
        return self.parse_expr()

    def parse_array_init(self) -> ast.ArrayInit:
        tok = self.expect_op("[")
        items: list[tuple[ast.Expr | None, ast.Expr]] = []
        if not self.at_op("]"):
            while True:
                value = self.parse_initializer()
                if isinstance(value, ast.Literal) and value.kind == "INT" and self.at_op("("):
                    self.advance()
                    inner = self.parse_initializer() if not self.at_op(")") else None
                    self.expect_op(")")
                    items.append((value, inner if inner is not None else ast.Literal("INT", "0")))
                else:
                    items.append((None, value))
                if self.at_op(","):
                    self.advance()
                    continue
                break
        self.expect_op("]")
        return ast.ArrayInit(items, pos=(tok.line, tok.col), end=self.prev_end())

    # -- statements --------------------------------------------------------

    def at_case_label(self) -> bool:
        tok = self.peek()
        if tok.kind in ("INT", "TYPED"):
            return self.peek(1).is_op(":", ",", "..")
        if tok.is_op("-") and self.peek(1).kind == "INT":
            return self.peek(2).is_op(":", ",", "..")
        if tok.kind == "IDENT":
            return self.peek(1).is_op(":", ",", "..")
        return False

    def parse_statements(self) -> list[ast.Stmt]:
        body: list[ast.Stmt] = []
        while True:
            tok = self.peek()
            if tok.kind == "EOF":
                return body
            if self.in_frames(tok):
                return body
            if self.case_context() and self.at_case_label():
                return body
            if tok.kind == "KEYWORD" and tok.value in CLOSERS:
                if len(self.frames) > 1 and tok.value.startswith("END_"):
                    # wrong END_ inside a block: the enclosing construct reports it once
                    return body
                self.advance()
                self.diag_tok(tok, "mismatched-end", f"unexpected {tok.value} without a matching opening statement")
                self.optional_semicolon()
                continue
            start = self.i
            try:
                stmt = self.parse_statement()
                if stmt is not None:
                    body.append(stmt)
            except ParseError as exc:
                self.record(exc)
                self.skip_statement()
                if self.i == start:
                    self.advance()

    def parse_body(self, closers: set[str], case: bool = False) -> list[ast.Stmt]:
        frame = set(closers)
        if case:
            frame.add(CASE_FRAME)
        self.frames.append(frozenset(frame))
        try:
            return self.parse_statements()
        finally:
            self.frames.pop()

    def close_block(self, opener: Token, closer: str) -> None:
        tok = self.peek()
        if tok.is_kw(closer):
            self.advance()
            self.optional_semicolon()
            return
        if tok.kind == "KEYWORD" and tok.value.startswith("END_") and not self.in_frames(tok):
            self.diag_tok(tok, "mismatched-end", f"expected {closer} to close {opener.value} "
                          f"(line {opener.line}) but found {tok.value}")
            self.advance()
            self.optional_semicolon()
            return
        self.diag("unclosed-construct", f"{opener.value} statement is not closed: missing {closer}",
                  (opener.line, opener.col), (opener.end_line, opener.end_col))

    def guarded_expr(self, *stops: str) -> ast.Expr:
        """Parse an expression; on error report it and skip to one of ``stops``."""
        tok = self.peek()
        try:
            expr = self.parse_expr()
        except ParseError as exc:
            self.record(exc)
            self.skip_to(*stops)
            return ast.Literal("BOOL", "FALSE", pos=(tok.line, tok.col))
        return expr

    def expect_block_kw(self, word: str, opener: Token) -> None:
        if self.at_kw(word):
            self.advance()
        else:
            tok = self.peek()
            self.diag_tok(tok, "missing-keyword", f"expected {word} in {opener.value} statement but found {_describe(tok)}")

    def parse_statement(self) -> ast.Stmt | None:
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.is_op(";"):
            self.advance()
            return ast.Empty(pos=pos, end=self.prev_end())
        if tok.kind == "KEYWORD":
            handler = getattr(self, f"_stmt_{tok.value.lower()}", None)
            if handler is not None:
                stmt = handler()
                if stmt is not None:
                    stmt.pos = pos
                    stmt.end = self.prev_end()
                return stmt
            if tok.value in UNSUPPORTED_BLOCKS:
                self.advance()
                self.skip_block(UNSUPPORTED_BLOCKS[tok.value])
                self.unsupported(tok, tok.value.lower(), self.prev_end())
                return None
            if tok.value in ("THIS", "SUPER"):
                self.advance()
                self.skip_statement()
                self.unsupported(tok, f"{tok.value} reference", self.prev_end())
                return ast.UnsupportedStmt(tok.value, pos=pos, end=self.prev_end())
        if tok.kind == "ADDRESS":
            self.advance()
            self.skip_statement()
            self.unsupported(tok, f"direct address {tok.value}", self.prev_end())
            return ast.UnsupportedStmt(tok.value, pos=pos, end=self.prev_end())
        if tok.kind == "IDENT" and self.peek(1).is_op(":") and not self.case_context():
            self.advance()
            self.advance()
            return ast.Label(tok.value, pos=pos, end=self.prev_end())
        if tok.kind == "IDENT" or tok.is_op("("):
            target = self.parse_postfix()
            if self.at_op(":="):
                self.advance()
                value = self.parse_expr()
                self.expect_semicolon()
                return ast.Assign(target, value, pos=pos, end=self.prev_end())
            if isinstance(target, ast.Call):
                self.expect_semicolon()
                return ast.CallStmt(target, pos=pos, end=self.prev_end())
            if isinstance(target, ast.Unsupported):
                self.skip_statement()
                return ast.UnsupportedStmt(target.text, pos=pos, end=self.prev_end())
            bad = self.peek()
            if bad.is_op("="):
                raise ParseError("expected ':=' for assignment but found '='", bad, "expected-assignment")
            raise ParseError(f"expected ':=' or a call after {tok.value!r} but found {_describe(bad)}", bad,
                             "expected-assignment")
        raise ParseError(f"unexpected {_describe(tok)} at start of statement", tok)

    def _stmt_if(self) -> ast.If:
        opener = self.advance()
        branches = []
        cond = self.guarded_expr("THEN")
        self.expect_block_kw("THEN", opener)
        branches.append((cond, self.parse_body({"ELSIF", "ELSE", "END_IF"})))
        else_body = None
        while self.at_kw("ELSIF"):
            self.advance()
            cond = self.guarded_expr("THEN")
            self.expect_block_kw("THEN", opener)
            branches.append((cond, self.parse_body({"ELSIF", "ELSE", "END_IF"})))
        if self.at_kw("ELSE"):
            self.advance()
            else_body = self.parse_body({"END_IF"})
        self.close_block(opener, "END_IF")
        return ast.If(branches, else_body)

    def parse_case_label(self) -> ast.CaseLabel:
        tok = self.peek()
        low = self.parse_unary()
        high = None
        if self.at_op(".."):
            self.advance()
            high = self.parse_unary()
        return ast.CaseLabel(low, high, pos=(tok.line, tok.col), end=self.prev_end())

    def _stmt_case(self) -> ast.Case:
        opener = self.advance()
        selector = self.guarded_expr("OF")
        self.expect_block_kw("OF", opener)
        clauses = []
        else_body = None
        while True:
            if self.at_case_label():
                labels = [self.parse_case_label()]
                while self.at_op(","):
                    self.advance()
                    labels.append(self.parse_case_label())
                self.expect_op(":")
                clauses.append((labels, self.parse_body({"ELSE", "END_CASE"}, case=True)))
                continue
            if self.at_kw("ELSE"):
                self.advance()
                else_body = self.parse_body({"END_CASE"})
                break
            tok = self.peek()
            if tok.is_kw("END_CASE") or tok.kind == "EOF" or self.in_frames(tok) or \
                    (tok.kind == "KEYWORD" and tok.value.startswith("END_")):
                break
            self.diag_tok(tok, "expected-case-label", f"expected a CASE label but found {_describe(tok)}")
            self.skip_statement()
        self.close_block(opener, "END_CASE")
        return ast.Case(selector, clauses, else_body)

    def _stmt_for(self) -> ast.For:
        opener = self.advance()
        var_tok = self.expect_ident("loop variable")
        var = ast.Name(var_tok.value, var_tok.hashed, pos=(var_tok.line, var_tok.col), end=(var_tok.end_line, var_tok.end_col))
        self.expect_op(":=")
        start = self.guarded_expr("TO", "DO")
        self.expect_block_kw("TO", opener)
        stop = self.guarded_expr("BY", "DO")
        step = None
        if self.at_kw("BY"):
            self.advance()
            step = self.guarded_expr("DO")
        self.expect_block_kw("DO", opener)
        body = self.parse_body({"END_FOR"})
        self.close_block(opener, "END_FOR")
        return ast.For(var, start, stop, step, body)

    def _stmt_while(self) -> ast.While:
        opener = self.advance()
        cond = self.guarded_expr("DO")
        self.expect_block_kw("DO", opener)
        body = self.parse_body({"END_WHILE"})
        self.close_block(opener, "END_WHILE")
        return ast.While(cond, body)

    def _stmt_repeat(self) -> ast.Repeat:
        opener = self.advance()
        body = self.parse_body({"UNTIL"})
        cond: ast.Expr = ast.Literal("BOOL", "TRUE")
        if self.at_kw("UNTIL"):
            self.advance()
            cond = self.guarded_expr("END_REPEAT")
        else:
            self.diag("unclosed-construct", "REPEAT statement is not closed: missing UNTIL",
                      (opener.line, opener.col), (opener.end_line, opener.end_col))
            return ast.Repeat(body, cond)
        self.close_block(opener, "END_REPEAT")
        return ast.Repeat(body, cond)

    def _simple(self, node_cls):
        self.advance()
        self.expect_semicolon()
        return node_cls()

    def _stmt_exit(self):
        return self._simple(ast.Exit)

    def _stmt_continue(self):
        return self._simple(ast.Continue)

    def _stmt_return(self):
        return self._simple(ast.Return)

    def _stmt_goto(self) -> ast.Goto:
        self.advance()
        label = self.expect_ident("label")
        self.expect_semicolon()
        return ast.Goto(label.value)

    _stmt_jmp = _stmt_goto

    def _stmt_region(self) -> ast.Region:
        opener = self.advance()
        if self.dialect is not None and not self.dialect.allows("regions"):
            self.unsupported(opener, "REGION block")
        start = self.peek()
        name = ""
        if start.line == opener.line and start.kind != "EOF":
            last = start
            while self.peek().line == opener.line and self.peek().kind != "EOF":
                last = self.advance()
            name = self.source[start.offset : last.end_offset]
        body = self.parse_body({"END_REGION"})
        self.close_block(opener, "END_REGION")
        return ast.Region(name, body)

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self._binary_level(0)

    _LEVELS = (("OR",), ("XOR",), ("AND", "&"), COMPARISON, ("+", "-"), ("*", "/", "MOD"))

    def _at_binop(self, ops) -> str | None:
        tok = self.peek()
        if tok.kind == "OP" and tok.value in ops:
            return tok.value
        if tok.kind == "KEYWORD" and tok.value in ops:
            return tok.value
        return None

    def _binary_level(self, level: int) -> ast.Expr:
        if level == len(self._LEVELS):
            return self.parse_unary()
        start = self.peek()
        left = self._binary_level(level + 1)
        while (op := self._at_binop(self._LEVELS[level])) is not None:
            self.advance()
            right = self._binary_level(level + 1)
            left = ast.Binary(op, left, right,
                              pos=(start.line, start.col), end=self.prev_end())
        return left

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.is_kw("NOT") or tok.is_op("-", "+"):
            self.advance()
            operand = self.parse_unary()
            return ast.Unary(tok.value, operand, pos=(tok.line, tok.col), end=self.prev_end())
        return self.parse_power()

    def parse_power(self) -> ast.Expr:
        start = self.peek()
        left = self.parse_postfix()
        while self.at_op("**"):
            self.advance()
            right = self.parse_postfix()
            left = ast.Binary("**", left, right, pos=(start.line, start.col), end=self.prev_end())
        return left

    def parse_postfix(self) -> ast.Expr:
        start = self.peek()
        expr = self.parse_primary()
        pos = (start.line, start.col)
        if isinstance(expr, (ast.Literal, ast.ArrayInit)):
            return expr
        while True:
            if self.at_op("."):
                self.advance()
                tok = self.peek()
                if tok.kind == "IDENT":
                    self.advance()
                    expr = ast.Member(expr, tok.value, pos=pos, end=self.prev_end())
                elif tok.kind in ("INT", "ADDRESS"):
                    self.advance()
                    self.unsupported(tok, "bit access", self.prev_end())
                    expr = ast.Unsupported(self.source[start.offset : tok.end_offset], pos=pos, end=self.prev_end())
                else:
                    raise ParseError(f"expected member name after '.' but found {_describe(tok)}", tok)
            elif self.at_op("["):
                self.advance()
                indices = [self.parse_expr()]
                while self.at_op(","):
                    self.advance()
                    indices.append(self.parse_expr())
                self.expect_op("]", f"expected ']' but found {_describe(self.peek())}")
                expr = ast.Index(expr, indices, pos=pos, end=self.prev_end())
            elif self.at_op("("):
                self.advance()
                args = self.parse_args()
                self.expect_op(")")
                expr = ast.Call(expr, args, pos=pos, end=self.prev_end())
            elif self.at_op("^"):
                caret = self.advance()
                self.unsupported(caret, "pointer dereference")
                expr = ast.Unsupported(self.source[start.offset : caret.end_offset], pos=pos, end=self.prev_end())
            else:
                return expr

    def parse_args(self) -> list[ast.Arg]:
        args: list[ast.Arg] = []
        if self.at_op(")"):
            return args
        while True:
            tok = self.peek()
            if tok.kind == "IDENT" and self.peek(1).is_op(":=", "=>"):
                self.advance()
                output = self.advance().value == "=>"
                value = self.parse_expr()
                args.append(ast.Arg(tok.value, value, output, pos=(tok.line, tok.col), end=self.prev_end()))
            else:
                value = self.parse_expr()
                args.append(ast.Arg(None, value, pos=(tok.line, tok.col), end=self.prev_end()))
            if self.at_op(","):
                self.advance()
                continue
            return args

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        pos = (tok.line, tok.col)
        end = (tok.end_line, tok.end_col)
        if tok.kind in ("INT", "REAL"):
            self.advance()
            return ast.Literal(tok.kind, tok.value, pos=pos, end=end)
        if tok.kind == "STRING":
            self.advance()
            return ast.Literal("STRING", tok.value, "STRING", pos=pos, end=end)
        if tok.kind == "TYPED":
            self.advance()
            return ast.Literal("TYPED", tok.value, tok.lit_type, pos=pos, end=end)
        if tok.is_kw("TRUE", "FALSE"):
            self.advance()
            return ast.Literal("BOOL", tok.value, "BOOL", pos=pos, end=end)
        if tok.kind == "IDENT":
            self.advance()
            if tok.quoted and self.dialect is not None and not self.dialect.allows("quoted_names"):
                return ast.Literal("WSTRING", f'"{tok.value}"', "WSTRING", pos=pos, end=end)
            return ast.Name(tok.value, tok.hashed, tok.quoted, pos=pos, end=end)
        if tok.is_op("("):
            self.advance()
            inner = self.parse_expr()
            if not self.at_op(")"):
                bad = self.peek()
                raise ParseError(f"unbalanced parentheses: expected ')' before {_describe(bad)}", bad,
                                 "unbalanced-parentheses")
            self.advance()
            return ast.Paren(inner, pos=pos, end=self.prev_end())
        if tok.is_op("["):
            return self.parse_array_init()
        if tok.kind == "ADDRESS":
            self.advance()
            self.unsupported(tok, f"direct address {tok.value}")
            return ast.Unsupported(tok.value, pos=pos, end=end)
        if tok.is_kw("THIS", "SUPER"):
            self.advance()
            self.unsupported(tok, f"{tok.value} reference")
            return ast.Unsupported(tok.value, pos=pos, end=end)
        if tok.is_op(")"):
            raise ParseError("unbalanced parentheses: unexpected ')'", tok, "unbalanced-parentheses")
        raise ParseError(f"expected an expression but found {_describe(tok)}", tok, "expected-expression")


def parse(source: str, dialect: DialectProfile | None = None) -> tuple[ast.Unit, list[RawDiag]]:
    """Best-effort parse; always returns a tree plus syntax diagnostics."""
    parser = Parser(source, dialect)
    unit = parser.parse_unit()
    return unit, parser.diags
