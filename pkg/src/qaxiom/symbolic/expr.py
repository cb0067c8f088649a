"""Expression trees over phase-space symbols.

Nodes are immutable and hashable.  They are always built through the
constructor functions (``add``, ``mul``, ``power``, ``quot``, ``fn``) which
flatten nested sums/products and fold constants, and nothing else.  An
``Expr`` pairs a node with the ``PhaseSpace`` that declares its symbols.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from numbers import Rational, Real
from typing import Iterable, Mapping, Union

from ..errors import MismatchedSpace, UnknownSymbol, UnsupportedExpression

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
FUNCTIONS = ("sin", "cos", "exp")
TIME = "t"
ENERGY = "E"


# ---------------------------------------------------------------------------
# phase space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSpace:
    """Declared symbols of a (possibly extended) phase space.

    Canonical pairs are named ``q{r}``/``p{r}`` for ``r`` running from
    ``index_base`` to ``index_base + dof - 1``.  The extended spaces built by
    :mod:`qaxiom.autonomize` use ``index_base=0`` so that ``q0``/``p0`` hold
    the time pair.  With both ``has_time`` and ``has_energy`` set, ``(t, -E)``
    is an additional conjugate pair.
    """

    dof: int
    has_time: bool = False
    has_energy: bool = False
    parameters: tuple = ()
    index_base: int = 1

    def __post_init__(self):
        if not isinstance(self.dof, int) or isinstance(self.dof, bool) or self.dof < 1:
            raise ValueError(f"dof must be a positive integer, got {self.dof!r}")
        if self.index_base not in (0, 1):
            raise ValueError("index_base must be 0 or 1")
        params = tuple(self.parameters)
        object.__setattr__(self, "parameters", params)
        reserved = set(self.coordinates) | set(self.momenta) | {TIME, ENERGY}
        seen = set()
        for name in params:
            if not isinstance(name, str) or not IDENT_RE.match(name):
                raise ValueError(f"invalid parameter name {name!r}")
            if name in reserved or name in FUNCTIONS:
                raise ValueError(f"parameter {name!r} collides with a reserved symbol")
            if name in seen:
                raise ValueError(f"duplicate parameter {name!r}")
            seen.add(name)

    @property
    def indices(self) -> range:
        return range(self.index_base, self.index_base + self.dof)

    @property
    def coordinates(self) -> tuple:
        return tuple(f"q{r}" for r in self.indices)

    @property
    def momenta(self) -> tuple:
        return tuple(f"p{r}" for r in self.indices)

    @property
    def phase_symbols(self) -> tuple:
        """Every declared symbol that is not a parameter, in state order."""
        extra = ((TIME,) if self.has_time else ()) + ((ENERGY,) if self.has_energy else ())
        return self.coordinates + self.momenta + extra

    @property
    def symbols(self) -> tuple:
        return self.phase_symbols + self.parameters

    @property
    def has_time_pair(self) -> bool:
        return self.has_time and self.has_energy

    def declares(self, name: str) -> bool:
        return name in self.symbols

    def symbol(self, name: str) -> "Expr":
        if not self.declares(name):
            raise UnknownSymbol(name)
        return Expr(Sym(name), self)

    def const(self, value) -> "Expr":
        return Expr(const(value), self)

    def __getitem__(self, name: str) -> "Expr":
        return self.symbol(name)


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: Fraction


@dataclass(frozen=True)
class Sym(Node):
    name: str


@dataclass(frozen=True)
class Sum(Node):
    terms: tuple


@dataclass(frozen=True)
class Product(Node):
    factors: tuple


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Quot(Node):
    """``num / den`` where ``den`` holds no phase-space symbol."""

    num: Node
    den: Node


@dataclass(frozen=True)
class Fn(Node):
    kind: str
    arg: Node


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(value) -> Const:
    if isinstance(value, Const):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a numeric constant")
    if isinstance(value, Rational):
        return Const(Fraction(value))
    if isinstance(value, Real):
        # shortest repr, so 0.1 becomes 1/10 rather than its binary expansion
        return Const(Fraction(str(float(value))))
    if isinstance(value, str):
        return Const(Fraction(value))
    raise TypeError(f"cannot make a constant from {value!r}")


def is_const(node: Node, value=None) -> bool:
    return isinstance(node, Const) and (value is None or node.value == value)


def add(*terms: Node) -> Node:
    flat = []
    total = Fraction(0)
    for t in terms:
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                total += p.value
            else:
                flat.append(p)
    if total != 0:
        flat.append(Const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors: Node) -> Node:
    flat = []
    coeff = Fraction(1)
    for f in factors:
        parts = f.factors if isinstance(f, Product) else (f,)
        for p in parts:
            if isinstance(p, Const):
                coeff *= p.value
            else:
                flat.append(p)
    if coeff == 0:
        return ZERO
    if coeff != 1:
        flat.insert(0, Const(coeff))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def neg(node: Node) -> Node:
    return mul(Const(Fraction(-1)), node)


def sub(a: Node, b: Node) -> Node:
    return add(a, neg(b))


def power(base: Node, exponent: int) -> Node:
    if not isinstance(exponent, int) or isinstance(exponent, bool) or exponent < 0:
        raise UnsupportedExpression(f"exponent must be a non-negative integer, got {exponent!r}")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def quot(num: Node, den: Node) -> Node:
    if is_const(den):
        if den.value == 0:
            raise ZeroDivisionError("division by the constant zero")
        if den.value == 1:
            return num
        if isinstance(num, Const):
            return Const(num.value / den.value)
    if is_const(num, 0):
        return ZERO
    return Quot(num, den)


def fn(kind: str, arg: Node) -> Node:
    if kind not in FUNCTIONS:
        raise UnsupportedExpression(f"unknown function {kind!r}")
    if is_const(arg, 0):
        return ZERO if kind == "sin" else ONE
    return Fn(kind, arg)


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------

def children(node: Node) -> tuple:
    if isinstance(node, Sum):
        return node.terms
    if isinstance(node, Product):
        return node.factors
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Quot):
        return (node.num, node.den)
    if isinstance(node, Fn):
        return (node.arg,)
    return ()


def free_symbols(node: Node) -> frozenset:
    if isinstance(node, Sym):
        return frozenset((node.name,))
    out = set()
    stack = list(children(node))
    while stack:
        n = stack.pop()
        if isinstance(n, Sym):
            out.add(n.name)
        else:
            stack.extend(children(n))
    return frozenset(out)


def substitute(node: Node, mapping: Mapping[str, Node]) -> Node:
    """Replace symbols by nodes, rebuilding through the constructors."""
    if isinstance(node, Sym):
        return mapping.get(node.name, node)
    if isinstance(node, Const):
        return node
    if isinstance(node, Sum):
        return add(*(substitute(t, mapping) for t in node.terms))
    if isinstance(node, Product):
        return mul(*(substitute(f, mapping) for f in node.factors))
    if isinstance(node, Pow):
        return power(substitute(node.base, mapping), node.exponent)
    if isinstance(node, Quot):
        return quot(substitute(node.num, mapping), substitute(node.den, mapping))
    if isinstance(node, Fn):
        return fn(node.kind, substitute(node.arg, mapping))
    raise TypeError(f"not an expression node: {node!r}")


def polynomial_degree(node: Node, variables: Iterable[str]):
    """Total degree in ``variables``, or None if not polynomial in them."""
    variables = frozenset(variables)

    def deg(n):
        if isinstance(n, Const):
            return 0
        if isinstance(n, Sym):
            return 1 if n.name in variables else 0
        if isinstance(n, Sum):
            ds = [deg(t) for t in n.terms]
            return None if None in ds else max(ds)
        if isinstance(n, Product):
            ds = [deg(f) for f in n.factors]
            return None if None in ds else sum(ds)
        if isinstance(n, Pow):
            d = deg(n.base)
            return None if d is None else d * n.exponent
        if isinstance(n, Quot):
            if free_symbols(n.den) & variables:
                return None
            return deg(n.num)
        if isinstance(n, Fn):
            return None if free_symbols(n.arg) & variables else 0
        raise TypeError(n)

    return deg(node)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_P_SUM, _P_PROD, _P_NEG, _P_POW, _P_ATOM = range(5)


def _const_text(value: Fraction):
    if value.denominator == 1:
        text = str(value.numerator)
        return text, (_P_ATOM if value >= 0 else _P_NEG)
    return f"{value.numerator}/{value.denominator}", _P_PROD


def _text(node: Node):
    """Return (text, precedence) for ``node``."""
    if isinstance(node, Const):
        return _const_text(node.value)
    if isinstance(node, Sym):
        return node.name, _P_ATOM
    if isinstance(node, Fn):
        return f"{node.kind}({_text(node.arg)[0]})", _P_ATOM
    if isinstance(node, Pow):
        return f"{_wrap(node.base, _P_ATOM)}^{node.exponent}", _P_POW
    if isinstance(node, Quot):
        return f"{_wrap(node.num, _P_PROD)}/{_wrap(node.den, _P_POW)}", _P_PROD
    if isinstance(node, Product):
        factors = list(node.factors)
        lead = ""
        if isinstance(factors[0], Const) and factors[0].value < 0:
            lead = "-"
            magnitude = -factors[0].value
            factors = factors[1:] if magnitude == 1 else [Const(magnitude)] + factors[1:]
        body = "*".join(_wrap(f, _P_NEG + 1) for f in factors)
        if lead:
            return lead + body, _P_NEG
        return body, _P_PROD
    if isinstance(node, Sum):
        parts = []
        for i, t in enumerate(node.terms):
            text, prec = _text(t)
            if i and text.startswith("-") and prec in (_P_NEG, _P_PROD):
                parts.append(" - " + text[1:])
            elif i:
                parts.append(" + " + (text if prec > _P_SUM else f"({text})"))
            else:
                parts.append(text)
        return "".join(parts), _P_SUM
    raise TypeError(node)


def _wrap(node: Node, minimum: int) -> str:
    text, prec = _text(node)
    return text if prec >= minimum else f"({text})"


def to_text(node: Node) -> str:
    """Render a node in the grammar accepted by :func:`parse_expr`."""
    return _text(node)[0]


# ---------------------------------------------------------------------------
# Expr: node + space
# ---------------------------------------------------------------------------

Operand = Union["Expr", int, float, Fraction]


@dataclass(frozen=True)
class Expr:
    node: Node
    space: PhaseSpace = field(compare=True)

    def __post_init__(self):
        unknown = sorted(free_symbols(self.node) - set(self.space.symbols))
        if unknown:
            raise UnknownSymbol(unknown[0])

    @property
    def free_symbols(self) -> frozenset:
        return free_symbols(self.node)

    def _coerce(self, other) -> Node:
        if isinstance(other, Expr):
            if other.space != self.space:
                raise MismatchedSpace(f"{other.space} != {self.space}")
            return other.node
        if isinstance(other, Node):
            return other
        return const(other)

    def __add__(self, other: Operand) -> "Expr":
        return Expr(add(self.node, self._coerce(other)), self.space)

    def __radd__(self, other: Operand) -> "Expr":
        return Expr(add(self._coerce(other), self.node), self.space)

    def __sub__(self, other: Operand) -> "Expr":
        return Expr(sub(self.node, self._coerce(other)), self.space)

    def __rsub__(self, other: Operand) -> "Expr":
        return Expr(sub(self._coerce(other), self.node), self.space)

    def __mul__(self, other: Operand) -> "Expr":
        return Expr(mul(self.node, self._coerce(other)), self.space)

    def __rmul__(self, other: Operand) -> "Expr":
        return Expr(mul(self._coerce(other), self.node), self.space)

    def __neg__(self) -> "Expr":
        return Expr(neg(self.node), self.space)

    def __pow__(self, exponent: int) -> "Expr":
        return Expr(power(self.node, exponent), self.space)

    def __truediv__(self, other: Operand) -> "Expr":
        den = self._coerce(other)
        check_denominator(den, self.space)
        return Expr(quot(self.node, den), self.space)

    def subs(self, **values: Operand) -> "Expr":
        return Expr(substitute(self.node, {k: self._coerce(v) for k, v in values.items()}), self.space)

    def __str__(self) -> str:
        return to_text(self.node)


def check_denominator(den: Node, space: PhaseSpace) -> None:
    """Denominators may only involve constants and parameters."""
    bad = sorted(free_symbols(den) - set(space.parameters))
    if bad:
        raise UnsupportedExpression(f"division by an expression in {bad[0]!r}")
    if is_const(den, 0):
        raise ZeroDivisionError("division by the constant zero")


def sum_exprs(exprs: Iterable[Expr], space: PhaseSpace) -> Expr:
    return reduce(lambda a, b: a + b, exprs, Expr(ZERO, space))


def sin(e: Expr) -> Expr:
    return Expr(fn("sin", e.node), e.space)


def cos(e: Expr) -> Expr:
    return Expr(fn("cos", e.node), e.space)


def exp(e: Expr) -> Expr:
    return Expr(fn("exp", e.node), e.space)
