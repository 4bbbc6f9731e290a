"""Shared lexical layer for model, document, context, program and input files."""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import dataclass

from .values import (
    BOOL, DATE, INT, MARKUP, TEXT, URI, Atomic, AtomicKind, BoolV, DateV,
    Finite, FiniteV, Fn, InjV, IntV, MarkupV, Product, Seq, SeqV, Sum, TextV,
    TupleV, UriV,
)

_DECODER = json.JSONDecoder(strict=False)

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

RESERVED = frozenset({"true", "false"})

ATOMIC_NAMES = {
    "Text": TEXT, "Markup": MARKUP, "Int": INT, "Bool": BOOL, "Date": DATE, "Uri": URI,
}


def is_identifier(s: str) -> bool:
    return bool(IDENT_RE.match(s)) and s not in RESERVED


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class ParseError(Exception):
    """One or more diagnostics produced while reading a source file."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT INT DATE STR MSTR USTR OP EOF
    text: str
    value: object
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<tstr>(?:markup|uri)?\"\"\"(?:.|\n)*?\"\"\")
  | (?P<str>(?:markup|uri)?"(?:[^"\\\n]|\\.)*")
  | (?P<date>\d{4}-\d{2}-\d{2}(?![0-9]))
  | (?P<int>-?\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>!=|<=|>=|[{}()\[\],;:.=<>@])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError([Diagnostic(line, col, f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        raw = m.group()
        if kind in ("tstr", "str"):
            prefix = ""
            body = raw
            for p in ("markup", "uri"):
                if raw.startswith(p):
                    prefix, body = p, raw[len(p):]
            if kind == "tstr":
                value = body[3:-3]
            else:
                try:
                    value = _DECODER.decode(body)
                except json.JSONDecodeError:
                    raise ParseError([Diagnostic(line, col, "invalid string escape")]) from None
            tok_kind = {"": "STR", "markup": "MSTR", "uri": "USTR"}[prefix]
            tokens.append(Token(tok_kind, raw, value, line, col))
        elif kind == "date":
            try:
                value = _dt.date.fromisoformat(raw)
            except ValueError:
                raise ParseError([Diagnostic(line, col, f"invalid date {raw}")]) from None
            tokens.append(Token("DATE", raw, value, line, col))
        elif kind == "int":
            tokens.append(Token("INT", raw, int(raw), line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", raw, raw, line, col))
        elif kind == "op":
            tokens.append(Token("OP", raw, raw, line, col))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = pos + raw.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", None, line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == "EOF"

    def is_op(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == "OP" and tok.text == text

    def is_word(self, word: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind == "IDENT" and tok.text == word

    def accept_op(self, text: str) -> bool:
        if self.is_op(text):
            self.pos += 1
            return True
        return False

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError([Diagnostic(tok.line, tok.col, message)])

    def expect_op(self, text: str) -> Token:
        if not self.is_op(text):
            self.error(f"expected {text!r}, found {_describe(self.peek())}")
        return self.next()

    def expect_word(self, word: str) -> Token:
        if not self.is_word(word):
            self.error(f"expected {word!r}, found {_describe(self.peek())}")
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text in RESERVED:
            self.error(f"expected {what}, found {_describe(tok)}")
        return self.next()

    def skip_separators(self):
        while self.accept_op(";"):
            pass


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.text)


# -- literals -----------------------------------------------------------------

LITERAL_START = ("STR", "MSTR", "USTR", "INT", "DATE")


def starts_literal(ts: TokenStream) -> bool:
    tok = ts.peek()
    if tok.kind in LITERAL_START:
        return True
    if tok.kind == "IDENT":
        return tok.text in RESERVED or ts.is_op(".", 1)
    return tok.kind == "OP" and tok.text in ("(", "[", "@")


def parse_atom_literal(ts: TokenStream):
    """A literal that is not a tuple/sequence/injection; None if absent."""
    tok = ts.peek()
    if tok.kind == "STR":
        ts.next()
        return TextV(tok.value)
    if tok.kind == "MSTR":
        ts.next()
        return MarkupV(tok.value)
    if tok.kind == "USTR":
        ts.next()
        return UriV(tok.value)
    if tok.kind == "INT":
        ts.next()
        return IntV(tok.value)
    if tok.kind == "DATE":
        ts.next()
        return DateV(tok.value)
    if tok.kind == "IDENT":
        if tok.text in RESERVED:
            ts.next()
            return BoolV(tok.text == "true")
        if ts.is_op(".", 1) and ts.peek(2).kind == "IDENT":
            ts.next()
            ts.next()
            lit = ts.expect_ident("finite literal")
            return FiniteV(tok.text, lit.text)
    return None


def parse_literal(ts: TokenStream):
    """Parse one value in canonical literal syntax."""
    v = parse_atom_literal(ts)
    if v is not None:
        return v
    if ts.accept_op("("):
        first = parse_literal(ts)
        if ts.accept_op(")"):
            return first
        items = [first]
        while ts.accept_op(","):
            items.append(parse_literal(ts))
        ts.expect_op(")")
        return TupleV(tuple(items))
    if ts.accept_op("["):
        items = []
        if not ts.is_op("]"):
            items.append(parse_literal(ts))
            while ts.accept_op(","):
                items.append(parse_literal(ts))
        ts.expect_op("]")
        return SeqV(tuple(items))
    if ts.accept_op("@"):
        tag = ts.expect_ident("variant tag").text
        ts.expect_op("(")
        payload = parse_literal(ts)
        ts.expect_op(")")
        return InjV(tag, payload)
    ts.error(f"expected a literal, found {_describe(ts.peek())}")


def parse_value_text(text: str):
    """Parse a whole string as exactly one literal."""
    ts = TokenStream(text)
    v = parse_literal(ts)
    if not ts.at_end():
        ts.error(f"unexpected {_describe(ts.peek())} after literal")
    return v


# -- types --------------------------------------------------------------------

def parse_type(ts: TokenStream):
    tok = ts.peek()
    if tok.kind == "IDENT":
        if tok.text in ATOMIC_NAMES:
            ts.next()
            return ATOMIC_NAMES[tok.text]
        if tok.text == "enum":
            ts.next()
            name = ts.expect_ident("enum name").text
            ts.expect_op("(")
            lits = [ts.expect_ident("enum literal").text]
            while ts.accept_op(","):
                lits.append(ts.expect_ident("enum literal").text)
            ts.expect_op(")")
            if len(set(lits)) != len(lits):
                ts.error(f"duplicate literal in enum {name}", tok)
            return Finite(name, tuple(lits))
        if tok.text == "Seq":
            ts.next()
            ts.expect_op("(")
            elem = parse_type(ts)
            ts.expect_op(")")
            return Seq(elem)
        if tok.text == "Fn":
            ts.next()
            ts.expect_op("(")
            dom = parse_type(ts)
            ts.expect_op(",")
            cod = parse_type(ts)
            ts.expect_op(")")
            return Fn(dom, cod)
        if tok.text == "Sum":
            ts.next()
            ts.expect_op("(")
            variants = []
            while True:
                tag = ts.expect_ident("variant tag").text
                ts.expect_op(":")
                variants.append((tag, parse_type(ts)))
                if not ts.accept_op(","):
                    break
            ts.expect_op(")")
            tags = [t for t, _ in variants]
            if len(variants) < 2:
                ts.error("a sum type needs at least two variants", tok)
            if len(set(tags)) != len(tags):
                ts.error("duplicate tag in sum type", tok)
            return Sum(tuple(variants))
        ts.error(f"unknown type name {tok.text!r}")
    if ts.accept_op("("):
        comps = [parse_type(ts)]
        while ts.accept_op(","):
            comps.append(parse_type(ts))
        ts.expect_op(")")
        if len(comps) == 1:
            return comps[0]
        return Product(tuple(comps))
    ts.error(f"expected a type, found {_describe(tok)}")


def parse_type_text(text: str):
    ts = TokenStream(text)
    t = parse_type(ts)
    if not ts.at_end():
        ts.error(f"unexpected {_describe(ts.peek())} after type")
    return t


def coerce_literal(v, ty):
    """Read a plain string literal as Markup or Uri where the target type asks.

    Document and rule literals are written without knowing whether a string
    slot holds text, markup or a URI; the slot type decides. Anything that
    does not fit is returned unchanged so the machine can report it.
    """
    if isinstance(v, TextV) and isinstance(ty, Atomic):
        if ty.kind is AtomicKind.MARKUP:
            return MarkupV(v.value)
        if ty.kind is AtomicKind.URI:
            return UriV(v.value)
        return v
    if isinstance(v, TupleV) and isinstance(ty, Product) and len(v.items) == len(ty.components):
        return TupleV(tuple(coerce_literal(x, t) for x, t in zip(v.items, ty.components)))
    if isinstance(v, SeqV) and isinstance(ty, Seq):
        return SeqV(tuple(coerce_literal(x, ty.elem) for x in v.items))
    if isinstance(v, InjV) and isinstance(ty, Sum):
        vt = ty.variant(v.tag)
        if vt is not None:
            return InjV(v.tag, coerce_literal(v.value, vt))
    return v
