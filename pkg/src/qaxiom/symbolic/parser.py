"""Recursive-descent parser for phase-space expressions.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | base ("^" uint)?
    base   := number | ident | fn "(" expr ")" | "(" expr ")"
    fn     := "sin" | "cos" | "exp"

Unary minus binds looser than ``^`` so ``-q1^2`` reads as ``-(q1^2)``.
The right operand of ``/`` may only contain constants and parameters.
"""
from __future__ import annotations

import re
from fractions import Fraction

from ..errors import ExprSyntaxError, UnknownSymbol
from .expr import (FUNCTIONS, Const, Expr, PhaseSpace, Sym, add, fn, free_symbols,
                   mul, neg, power, quot, sub)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, space: PhaseSpace):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.i = 0

    def error(self, message, token=None):
        token = token or self.peek()
        where = "end of input" if token[0] == "end" else repr(token[1])
        return ExprSyntaxError(f"{message}, found {where}", _byte_offset(self.text, token[2]), self.text)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, value):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == value:
            self.i += 1
            return tok
        return None

    def expect(self, value):
        tok = self.accept(value)
        if tok is None:
            raise self.error(f"expected {value!r}")
        return tok

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error("unexpected token")
        return node

    def expr(self):
        node = self.term()
        while True:
            if self.accept("+"):
                node = add(node, self.term())
            elif self.accept("-"):
                node = sub(node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            if self.accept("*"):
                node = mul(node, self.factor())
            elif (tok := self.accept("/")) is not None:
                den = self.factor()
                bad = sorted(free_symbols(den) - set(self.space.parameters))
                if bad:
                    raise ExprSyntaxError(
                        f"division by non-constant expression (contains {bad[0]!r})",
                        _byte_offset(self.text, tok[2]), self.text)
                if isinstance(den, Const) and den.value == 0:
                    raise ExprSyntaxError("division by zero", _byte_offset(self.text, tok[2]), self.text)
                node = quot(node, den)
            else:
                return node

    def factor(self):
        if self.accept("-"):
            return neg(self.factor())
        node = self.base()
        if self.accept("^"):
            tok = self.peek()
            if tok[0] != "number" or not tok[1].isdigit():
                raise self.error("expected a non-negative integer exponent")
            self.advance()
            node = power(node, int(tok[1]))
        return node

    def base(self):
        tok = self.peek()
        kind, value, _ = tok
        if kind == "number":
            self.advance()
            return Const(Fraction(value))
        if kind == "ident":
            self.advance()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return fn(value, arg)
            if not self.space.declares(value):
                raise UnknownSymbol(value)
            return Sym(value)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, symbol, function or '('")


def parse_expr(text: str, space: PhaseSpace) -> Expr:
    """Parse ``text`` into an :class:`Expr` over ``space``.

    Raises :class:`ExprSyntaxError` (carrying a byte offset) for malformed
    input and :class:`UnknownSymbol` for identifiers ``space`` does not declare.
    """
    return Expr(_Parser(text, space).parse(), space)
