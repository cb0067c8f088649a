"""Symbolic phase-space algebra: expressions, parsing, derivatives, brackets."""
from .calculus import differentiate, poisson_bracket
from .evaluate import compile_exprs, equal_numeric, eval_expr, numeric_gap
from .expr import (Const, Expr, Fn, Node, PhaseSpace, Pow, Product, Quot, Sum, Sym,
                   cos, exp, polynomial_degree, sin, substitute, to_text)
from .parser import parse_expr

__all__ = [
    "Const", "Expr", "Fn", "Node", "PhaseSpace", "Pow", "Product", "Quot", "Sum", "Sym",
    "compile_exprs", "cos", "differentiate", "equal_numeric", "eval_expr", "exp",
    "numeric_gap", "parse_expr", "poisson_bracket", "polynomial_degree", "sin", "substitute", "to_text",
]
