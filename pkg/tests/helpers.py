"""Random expression generators shared by the test modules."""
from fractions import Fraction

import numpy as np

from qaxiom.symbolic import Expr, PhaseSpace
from qaxiom.symbolic.expr import Const, Sym, add, mul, power, fn


def random_polynomial(rng, space: PhaseSpace, max_degree=3, n_terms=4, symbols=None):
    """Sum of random monomials with small rational coefficients."""
    symbols = list(symbols or space.phase_symbols)
    terms = []
    for _ in range(n_terms):
        coeff = Const(Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4))))
        deg = int(rng.integers(0, max_degree + 1))
        factors = [coeff]
        for _ in range(deg):
            factors.append(Sym(symbols[int(rng.integers(len(symbols)))]))
        terms.append(mul(*factors))
    return Expr(add(*terms), space)


def random_expression(rng, space: PhaseSpace, depth=3):
    """Random tree mixing sums, products, powers and sin/cos/exp."""
    symbols = list(space.symbols)
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.3:
            return Const(Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 3))))
        return Sym(symbols[int(rng.integers(len(symbols)))])
    kind = rng.choice(["add", "mul", "pow", "fn"])
    if kind == "add":
        return add(random_expression(rng, space, depth - 1), random_expression(rng, space, depth - 1))
    if kind == "mul":
        return mul(random_expression(rng, space, depth - 1), random_expression(rng, space, depth - 1))
    if kind == "pow":
        return power(random_expression(rng, space, depth - 1), int(rng.integers(0, 4)))
    return fn(str(rng.choice(["sin", "cos", "exp"])), random_expression(rng, space, depth - 1))


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    return scale * h / np.linalg.norm(h, 2)
