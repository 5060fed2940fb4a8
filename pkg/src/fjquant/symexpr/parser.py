"""Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := ('-'|'+') unary | factor
    factor := base ('^' integer)?
    base   := integer | identifier | '(' expr ')'
"""

from __future__ import annotations

import re
from typing import Iterable, List, NamedTuple

from .expr import Expr, ExprError, Symbol

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _Tok(NamedTuple):
    kind: str  # 'int', 'name', 'op', 'end'
    text: str
    pos: int


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if not m:
            break
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(_Tok("int", m.group(1), start))
        elif m.group(2):
            toks.append(_Tok("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", start)
            toks.append(_Tok("op", ch, start))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, names: set):
        self.toks = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str):
        t = self.take()
        if t.kind != "op" or t.text != op:
            raise ParseError(f"expected {op!r}", t.pos)

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            raise ParseError("empty expression", 0)
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            t = self.take()
            rhs = self.unary()
            if t.text == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    raise ParseError("division by the zero polynomial", t.pos)
                e = e / rhs
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "op" and t.text in "+-":
            self.take()
            e = self.unary()
            return -e if t.text == "-" else e
        return self.factor()

    def factor(self) -> Expr:
        base = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            t = self.take()
            if t.kind != "int":
                raise ParseError("expected a non-negative integer exponent", t.pos)
            return base ** int(t.text)
        return base

    def base(self) -> Expr:
        t = self.take()
        if t.kind == "int":
            return Expr.const(int(t.text))
        if t.kind == "name":
            if t.text not in self.names:
                raise ParseError(f"undeclared identifier {t.text!r}", t.pos)
            return Expr.symbol(t.text)
        if t.kind == "op" and t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError("expected a number, identifier or '('" if t.kind != "end"
                         else "unexpected end of input", t.pos)


def parse_expr(text: str, symbols: Iterable = ()) -> Expr:
    """Parse ``text`` into canonical form; identifiers must be in ``symbols``."""
    names = {s.name if isinstance(s, Symbol) else s for s in symbols}
    return _Parser(text, names).parse()
