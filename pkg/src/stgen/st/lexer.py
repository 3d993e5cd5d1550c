"""Tokenizer for the Structured Text subset, covering CODESYS and SCL lexical forms."""
from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset({
    "FUNCTION_BLOCK", "END_FUNCTION_BLOCK", "FUNCTION", "END_FUNCTION", "PROGRAM", "END_PROGRAM",
    "VAR_INPUT", "VAR_OUTPUT", "VAR_IN_OUT", "VAR", "VAR_TEMP", "VAR_GLOBAL", "VAR_STAT", "END_VAR",
    "CONSTANT", "RETAIN", "NON_RETAIN",
    "IF", "THEN", "ELSIF", "ELSE", "END_IF", "CASE", "OF", "END_CASE", "FOR", "TO", "BY", "DO",
    "END_FOR", "WHILE", "END_WHILE", "REPEAT", "UNTIL", "END_REPEAT", "EXIT", "CONTINUE", "RETURN",
    "AND", "OR", "XOR", "NOT", "MOD", "TRUE", "FALSE", "ARRAY", "BEGIN", "REGION", "END_REGION",
    "GOTO", "JMP", "POINTER", "REFERENCE", "METHOD", "END_METHOD", "PROPERTY", "END_PROPERTY",
    "EXTENDS", "IMPLEMENTS", "AT", "STRUCT", "END_STRUCT", "TYPE", "END_TYPE", "VERSION",
    "ACTION", "END_ACTION", "INTERFACE", "END_INTERFACE", "THIS", "SUPER",
})

# Prefixes introducing date/time literals: T#5s, TOD#12:00:00, D#2024-01-01 ...
TIME_PREFIXES = {
    "T": "TIME", "TIME": "TIME", "LT": "LTIME", "LTIME": "LTIME",
    "D": "DATE", "DATE": "DATE", "TOD": "TIME_OF_DAY", "TIME_OF_DAY": "TIME_OF_DAY", "LTOD": "LTOD",
    "DT": "DATE_AND_TIME", "DATE_AND_TIME": "DATE_AND_TIME", "LDT": "LDT", "S5T": "S5TIME",
}

TWO_CHAR = (":=", "=>", "<=", ">=", "<>", "**", "..")
ONE_CHAR = set(";:,()[].+-*/=<>&^")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT KEYWORD INT REAL STRING TYPED OP ADDRESS ERROR EOF
    value: str
    line: int
    col: int
    end_line: int
    end_col: int
    offset: int
    end_offset: int
    hashed: bool = False
    quoted: bool = False
    lit_type: str | None = None

    def is_kw(self, *words: str) -> bool:
        return self.kind == "KEYWORD" and self.value in words

    def is_op(self, *ops: str) -> bool:
        return self.kind == "OP" and self.value in ops


@dataclass(frozen=True)
class LexError:
    message: str
    line: int
    col: int
    end_line: int
    end_col: int


class Lexer:
    def __init__(self, source: str, keywords=KEYWORDS):
        self.src = source
        self.keywords = keywords
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.errors: list[LexError] = []

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos >= len(self.src):
                return
            if self.src[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.src[i] if i < len(self.src) else ""

    def _emit(self, kind, start, sline, scol, **kw) -> Token:
        tok = Token(kind, kw.pop("value", self.src[start : self.pos]), sline, scol,
                    self.line, self.col, start, self.pos, **kw)
        self.tokens.append(tok)
        return tok

    def _error(self, message, sline, scol):
        self.errors.append(LexError(message, sline, scol, self.line, self.col))

    def _skip_block(self, closer: str, sline: int, scol: int, what: str) -> None:
        end = self.src.find(closer, self.pos)
        if end < 0:
            self._advance(len(self.src) - self.pos)
            self._error(f"unterminated {what}", sline, scol)
        else:
            self._advance(end + len(closer) - self.pos)

    def _word(self) -> str:
        start = self.pos
        while self._peek() and (self._peek().isalnum() or self._peek() == "_"):
            self._advance()
        return self.src[start : self.pos]

    def _number_body(self) -> str:
        """Digits with optional base prefix, fraction and exponent; returns INT or REAL."""
        while self._peek().isdigit() or self._peek() == "_":
            self._advance()
        if self._peek() == "#":
            self._advance()
            while self._peek().isalnum() or self._peek() == "_":
                self._advance()
            return "INT"
        kind = "INT"
        if self._peek() == "." and self._peek(1).isdigit():
            kind = "REAL"
            self._advance()
            while self._peek().isdigit() or self._peek() == "_":
                self._advance()
        if self._peek() in ("e", "E") and (self._peek(1).isdigit() or (self._peek(1) in "+-" and self._peek(2).isdigit())):
            kind = "REAL"
            self._advance(2)
            while self._peek().isdigit():
                self._advance()
        return kind

    def run(self) -> tuple[list[Token], list[LexError]]:
        src = self.src
        while self.pos < len(src):
            ch = self._peek()
            start, sline, scol = self.pos, self.line, self.col
            if ch.isspace():
                self._advance()
            elif src.startswith("(*", self.pos):
                self._advance(2)
                self._skip_block("*)", sline, scol, "comment")
            elif src.startswith("/*", self.pos):
                self._advance(2)
                self._skip_block("*/", sline, scol, "comment")
            elif src.startswith("//", self.pos):
                while self._peek() and self._peek() != "\n":
                    self._advance()
            elif ch == "{":
                self._advance()
                self._skip_block("}", sline, scol, "pragma")
            elif ch == "'":
                self._string(start, sline, scol)
            elif ch == '"':
                self._advance()
                while self._peek() and self._peek() not in '"\n':
                    self._advance()
                if self._peek() != '"':
                    self._error("unterminated quoted name", sline, scol)
                    self._emit("ERROR", start, sline, scol)
                    continue
                self._advance()
                self._emit("IDENT", start, sline, scol, value=src[start + 1 : self.pos - 1], quoted=True)
            elif ch == "#" and (self._peek(1).isalpha() or self._peek(1) == "_"):
                self._advance()
                word = self._word()
                self._emit("IDENT", start, sline, scol, value=word, hashed=True)
            elif ch.isdigit():
                kind = self._number_body()
                self._emit(kind, start, sline, scol)
            elif ch.isalpha() or ch == "_":
                word = self._word()
                upper = word.upper()
                if self._peek() == "#":
                    self._typed_literal(upper, start, sline, scol)
                elif upper in self.keywords:
                    self._emit("KEYWORD", start, sline, scol, value=upper)
                else:
                    self._emit("IDENT", start, sline, scol, value=word)
            elif ch == "%":
                self._advance()
                while self._peek().isalnum() or self._peek() in "._*":
                    self._advance()
                self._emit("ADDRESS", start, sline, scol)
            else:
                two = src[self.pos : self.pos + 2]
                if two in TWO_CHAR:
                    self._advance(2)
                    self._emit("OP", start, sline, scol)
                elif ch in ONE_CHAR:
                    self._advance()
                    self._emit("OP", start, sline, scol)
                else:
                    self._advance()
                    self._error(f"unexpected character {ch!r}", sline, scol)
                    self._emit("ERROR", start, sline, scol)
        self.tokens.append(Token("EOF", "", self.line, self.col, self.line, self.col, self.pos, self.pos))
        return self.tokens, self.errors

    def _string(self, start, sline, scol):
        self._advance()
        while True:
            c = self._peek()
            if not c or c == "\n":
                self._error("unterminated string literal", sline, scol)
                self._emit("ERROR", start, sline, scol)
                return
            if c == "$":
                self._advance(2)
                continue
            self._advance()
            if c == "'":
                break
        self._emit("STRING", start, sline, scol, lit_type="STRING")

    def _typed_literal(self, prefix: str, start, sline, scol):
        self._advance()  # '#'
        if prefix in TIME_PREFIXES:
            while self._peek() and (self._peek().isalnum() or self._peek() in "_:.-+"):
                self._advance()
            self._emit("TYPED", start, sline, scol, lit_type=TIME_PREFIXES[prefix])
            return
        if self._peek() in "+-":
            self._advance()
        if self._peek().isdigit():
            self._number_body()
        else:
            self._word()
        self._emit("TYPED", start, sline, scol, lit_type=prefix)


def tokenize_st(source: str) -> tuple[list[Token], list[LexError]]:
    return Lexer(source).run()
