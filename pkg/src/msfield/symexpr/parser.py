"""Recursive descent parser for the shared expression grammar.

Grammar (whitespace insensitive):

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' ['-'] INT)?
    primary := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Identifiers resolve through a SymbolTable; the function names sin, cos, exp,
log, sqrt and tanh are reserved.  Exponents must be integer literals.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import FUNCTIONS, Expr, ExprError, as_expr, const, func, pow_int, sym
from .table import SymbolTable


class ParseError(ExprError):
    """Syntax or resolution failure, carrying the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_OPS = set("+-*/^(),")


def _tokenize(source: str):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                if source[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("num", source[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("ident", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character '{ch}'", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source: str, table: SymbolTable):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.table = table

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            raise ParseError(f"expected '{kind}', found '{tok[1] or 'end of input'}'", tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"trailing input '{tok[1]}'", tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "end":
            op = self.take()[0]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.factor()
            e = e * rhs if op == "*" else e / rhs
        return e

    def factor(self) -> Expr:
        if self.peek()[0] == "-":
            self.take()
            return -self.factor()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[0] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or "." in tok[1]:
                raise ParseError("exponent must be an integer literal", tok[2])
            return pow_int(base, sign * int(tok[1]))
        return base

    def primary(self) -> Expr:
        tok = self.take()
        kind, text, offset = tok
        if kind == "num":
            return const(Fraction(text))
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                close = self.take()
                if close[0] == ",":
                    raise ParseError(f"function '{text}' takes exactly one argument", close[2])
                if close[0] != ")":
                    raise ParseError("expected ')'", close[2])
                return func(text, arg)
            s = self.table.lookup(text)
            if s is None:
                raise ParseError(f"unknown symbol '{text}'", offset)
            return sym(s)
        raise ParseError(f"unexpected token '{text or 'end of input'}'", offset)


def parse_expr(source: str, table: SymbolTable) -> Expr:
    """Parse `source` against `table`, returning the canonical expression."""
    return _Parser(source, table).parse()
