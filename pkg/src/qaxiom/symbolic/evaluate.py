"""Numerical evaluation of expressions and randomized identity testing."""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from ..errors import MismatchedSpace, UnboundSymbol
from .expr import Const, Expr, Fn, Node, Pow, Product, Quot, Sum, Sym, free_symbols

DEFAULT_SEED = 20240101
DEFAULT_BOX = (-2.0, 2.0)
DEFAULT_TRIALS = 100
DEFAULT_TOL = 1e-9

_NUMPY_FN = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_MATH_FN = {"sin": "math.sin", "cos": "math.cos", "exp": "math.exp"}


def eval_node(node: Node, env: Mapping):
    """Evaluate ``node``; values in ``env`` may be floats or numpy arrays."""
    if isinstance(node, Const):
        return float(node.value)
    if isinstance(node, Sym):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundSymbol(node.name) from None
    if isinstance(node, Sum):
        total = eval_node(node.terms[0], env)
        for t in node.terms[1:]:
            total = total + eval_node(t, env)
        return total
    if isinstance(node, Product):
        prod = eval_node(node.factors[0], env)
        for f in node.factors[1:]:
            prod = prod * eval_node(f, env)
        return prod
    if isinstance(node, Pow):
        return eval_node(node.base, env) ** node.exponent
    if isinstance(node, Quot):
        return eval_node(node.num, env) / eval_node(node.den, env)
    if isinstance(node, Fn):
        return _NUMPY_FN[node.kind](eval_node(node.arg, env))
    raise TypeError(f"not an expression node: {node!r}")


def eval_expr(e: Expr, assignment: Mapping[str, float]) -> float:
    """Evaluate ``e`` at a point. Every free symbol must be bound."""
    missing = sorted(e.free_symbols - set(assignment))
    if missing:
        raise UnboundSymbol(missing[0])
    return float(eval_node(e.node, assignment))


def numeric_gap(a: Expr, b: Expr, trials: int = DEFAULT_TRIALS, box=None, seed: int = DEFAULT_SEED,
                fixed: Mapping[str, float] | None = None) -> float:
    """Largest ``|a - b| / (1 + |a|)`` over the sample points of :func:`equal_numeric`."""
    if a.space != b.space:
        raise MismatchedSpace("operands live in different phase spaces")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fixed = dict(fixed or {})
    names = sorted((a.free_symbols | b.free_symbols) - set(fixed))
    rng = np.random.default_rng(seed)
    env = {k: np.full(trials, float(v)) for k, v in fixed.items()}
    for name in names:
        lo, hi = _interval(box, name)
        env[name] = rng.uniform(lo, hi, trials)
    with np.errstate(all="ignore"):
        va = np.broadcast_to(np.asarray(eval_node(a.node, env), dtype=float), (trials,))
        vb = np.broadcast_to(np.asarray(eval_node(b.node, env), dtype=float), (trials,))
        gap = np.abs(va - vb) / (1.0 + np.abs(va))
    if not np.all(np.isfinite(gap)):
        return math.inf
    return float(np.max(gap))


def equal_numeric(a: Expr, b: Expr, trials: int = DEFAULT_TRIALS, box=None,
                  tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED,
                  fixed: Mapping[str, float] | None = None) -> bool:
    """Randomized identity test: ``|a - b| <= tol * (1 + |a|)`` at sampled points.

    ``box`` is either one ``(lo, hi)`` interval for every symbol or a mapping
    from symbol name to interval; symbols missing from the mapping use
    ``DEFAULT_BOX``.  Symbols in ``fixed`` are not sampled.
    """
    if a.space != b.space:
        raise MismatchedSpace("equal_numeric operands live in different phase spaces")
    return numeric_gap(a, b, trials, box, seed, fixed) <= tol


def _interval(box, name):
    if box is None:
        return DEFAULT_BOX
    if isinstance(box, Mapping):
        return box.get(name, DEFAULT_BOX)
    return box


def _source(node: Node, names: Mapping[str, str]) -> str:
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Sym):
        return names[node.name]
    if isinstance(node, Sum):
        return "(" + " + ".join(_source(t, names) for t in node.terms) + ")"
    if isinstance(node, Product):
        return "(" + " * ".join(_source(f, names) for f in node.factors) + ")"
    if isinstance(node, Pow):
        return f"({_source(node.base, names)} ** {node.exponent})"
    if isinstance(node, Quot):
        return f"({_source(node.num, names)} / {_source(node.den, names)})"
    if isinstance(node, Fn):
        return f"{_MATH_FN[node.kind]}({_source(node.arg, names)})"
    raise TypeError(node)


def compile_exprs(exprs: Sequence[Expr], argnames: Sequence[str], params: Mapping[str, float] | None = None):
    """Compile expressions into one scalar function of ``argnames``.

    The returned callable takes positional floats in ``argnames`` order and
    returns a tuple of floats.  Every other free symbol must be bound by
    ``params``; missing ones raise :class:`UnboundSymbol` here, not at call time.
    Parameter values are frozen into the generated code.
    """
    params = dict(params or {})
    argnames = list(argnames)
    names = {k: f"({float(v)!r})" for k, v in params.items()}
    names.update({n: f"_a{i}" for i, n in enumerate(argnames)})
    needed = set().union(*(free_symbols(e.node) for e in exprs)) if exprs else set()
    missing = sorted(needed - set(names))
    if missing:
        raise UnboundSymbol(missing[0])
    body = ", ".join(_source(e.node, names) for e in exprs)
    args = ", ".join(f"_a{i}" for i in range(len(argnames)))
    src = f"def _compiled({args}):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    namespace = {"math": math}
    exec(compile(src, "<qaxiom-compiled>", "exec"), namespace)
    return namespace["_compiled"]
