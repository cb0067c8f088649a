"""Partial derivatives and Poisson brackets."""
from __future__ import annotations

from fractions import Fraction

from ..errors import MismatchedSpace, UnknownSymbol
from .expr import (ENERGY, TIME, ZERO, Const, Expr, Fn, Node, Pow, Product, Quot, Sum,
                   Sym, add, fn, free_symbols, mul, neg, power, quot, sub)


def diff_node(node: Node, var: str) -> Node:
    if var not in free_symbols(node):
        return ZERO
    if isinstance(node, Sym):
        return Const(Fraction(1))
    if isinstance(node, Sum):
        return add(*(diff_node(t, var) for t in node.terms))
    if isinstance(node, Product):
        fs = node.factors
        terms = []
        for i, f in enumerate(fs):
            df = diff_node(f, var)
            if df != ZERO:
                terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(node, Pow):
        n = node.exponent
        return mul(Const(Fraction(n)), power(node.base, n - 1), diff_node(node.base, var))
    if isinstance(node, Quot):
        dnum = diff_node(node.num, var)
        if var not in free_symbols(node.den):
            return quot(dnum, node.den)
        # only reachable when differentiating by a parameter
        dden = diff_node(node.den, var)
        return quot(sub(mul(dnum, node.den), mul(node.num, dden)), power(node.den, 2))
    if isinstance(node, Fn):
        darg = diff_node(node.arg, var)
        if node.kind == "sin":
            outer = fn("cos", node.arg)
        elif node.kind == "cos":
            outer = neg(fn("sin", node.arg))
        else:
            outer = node
        return mul(outer, darg)
    raise TypeError(f"not an expression node: {node!r}")


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to the symbol ``var``."""
    if not e.space.declares(var):
        raise UnknownSymbol(var)
    return Expr(diff_node(e.node, var), e.space)


def poisson_bracket(u: Expr, v: Expr) -> Expr:
    """``{u, v} = sum_r du/dq_r dv/dp_r - du/dp_r dv/dq_r``.

    When the space carries both ``t`` and ``E``, ``(t, -E)`` joins the sum as
    one more canonical pair.
    """
    if u.space != v.space:
        raise MismatchedSpace("Poisson bracket operands live in different phase spaces")
    space = u.space
    terms = []
    for q, p in zip(space.coordinates, space.momenta):
        terms.append(mul(diff_node(u.node, q), diff_node(v.node, p)))
        terms.append(neg(mul(diff_node(u.node, p), diff_node(v.node, q))))
    if space.has_time_pair:
        # d/d(-E) = -d/dE
        terms.append(neg(mul(diff_node(u.node, TIME), diff_node(v.node, ENERGY))))
        terms.append(mul(diff_node(u.node, ENERGY), diff_node(v.node, TIME)))
    return Expr(add(*terms), space)
