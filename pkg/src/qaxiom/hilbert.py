"""Finite-dimensional kets and operators for one canonical pair.

Two realizations of ``(Q, P)`` are provided:

* ``Grid``: position eigenbasis on a uniform mesh, ``P = -i hbar D`` with
  ``D`` a central finite-difference matrix of order 2 or 4.
* ``Ladder``: truncated Fock basis of an oscillator with mass ``mass`` and
  frequency ``omega``.

``Abstract`` carries no canonical pair and only tags a dimension, for
operators (spin matrices, random Hermitian generators) that are not built
from ``Q`` and ``P``.

Neither realization can satisfy ``[Q, P] = i hbar`` exactly (the trace of a
commutator vanishes), so identities are checked on an *interior block* that
drops ``interior_margin`` basis states at the truncated edges.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Union

import numpy as np

from .errors import InvalidSpec, MismatchedRep, UnboundSymbol, UnsupportedExpression, ZeroKet
from .symbolic import Expr
from .symbolic.evaluate import eval_node
from .symbolic.expr import Const, Fn, Node, Pow, Product, Quot, Sum, Sym, free_symbols

_FD_STENCILS = {
    # offsets k > 0 with weight w: D psi_i += w * (psi_{i+k} - psi_{i-k}) / dq
    2: {1: 1 / 2},
    4: {1: 2 / 3, 2: -1 / 12},
}


@dataclass(frozen=True)
class Grid:
    n_points: int
    q_min: float
    q_max: float
    boundary: str = "dirichlet"
    fd_order: int = 2

    def __post_init__(self):
        if not isinstance(self.n_points, int) or self.n_points < 3:
            raise InvalidSpec(f"grid needs n_points >= 3, got {self.n_points!r}")
        if not (math.isfinite(self.q_min) and math.isfinite(self.q_max)) or self.q_min >= self.q_max:
            raise InvalidSpec(f"grid needs q_min < q_max, got [{self.q_min}, {self.q_max}]")
        if self.boundary not in ("dirichlet", "periodic"):
            raise InvalidSpec(f"unknown boundary {self.boundary!r}")
        if self.fd_order not in _FD_STENCILS:
            raise InvalidSpec(f"fd_order must be 2 or 4, got {self.fd_order!r}")

    @property
    def dim(self) -> int:
        return self.n_points

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)


@dataclass(frozen=True)
class Ladder:
    dim: int
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 2:
            raise InvalidSpec(f"ladder needs dim >= 2, got {self.dim!r}")
        if not (self.mass > 0 and self.omega > 0):
            raise InvalidSpec("ladder needs positive mass and omega")


@dataclass(frozen=True)
class Abstract:
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, int) or self.dim < 1:
            raise InvalidSpec(f"dimension must be a positive integer, got {self.dim!r}")


Kind = Union[Grid, Ladder, Abstract]


@dataclass(frozen=True)
class Representation:
    kind: Kind
    hbar: float = 1.0
    interior_margin: int = None

    def __post_init__(self):
        if not isinstance(self.kind, (Grid, Ladder, Abstract)):
            raise InvalidSpec(f"unknown representation kind {self.kind!r}")
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise InvalidSpec(f"hbar must be positive, got {self.hbar!r}")
        margin = self.interior_margin
        if margin is None:
            if isinstance(self.kind, Grid):
                margin = self.kind.fd_order // 2
            elif isinstance(self.kind, Ladder):
                margin = 1
            else:
                margin = 0
            object.__setattr__(self, "interior_margin", margin)
        if margin < 0 or self.interior_block_size(margin) < 1:
            raise InvalidSpec(f"interior margin {margin} leaves no interior block")

    @property
    def dim(self) -> int:
        return self.kind.dim

    @property
    def has_canonical_pair(self) -> bool:
        return not isinstance(self.kind, Abstract)

    def interior_block_size(self, margin: int) -> int:
        if isinstance(self.kind, Grid):
            return self.dim - 2 * margin
        return self.dim - margin

    def interior(self, margin: int = None) -> slice:
        """Index range of the interior block for ``margin`` (default: own margin)."""
        m = self.interior_margin if margin is None else margin
        if self.interior_block_size(m) < 1:
            raise InvalidSpec(f"margin {m} leaves no interior block in dimension {self.dim}")
        if isinstance(self.kind, Grid):
            return slice(m, self.dim - m)
        return slice(0, self.dim - m)

    # -- canonical matrices -------------------------------------------------

    @cached_property
    def points(self) -> np.ndarray:
        if not isinstance(self.kind, Grid):
            raise UnsupportedExpression("only grid representations have mesh points")
        g = self.kind
        return g.q_min + g.spacing * np.arange(g.n_points)

    @cached_property
    def derivative_matrix(self) -> np.ndarray:
        """Real antisymmetric central-difference matrix approximating d/dq."""
        if not isinstance(self.kind, Grid):
            raise UnsupportedExpression("only grid representations have a derivative matrix")
        g = self.kind
        n = g.n_points
        d = np.zeros((n, n))
        for k, w in _FD_STENCILS[g.fd_order].items():
            for i in range(n):
                for j, sign in ((i + k, 1.0), (i - k, -1.0)):
                    if g.boundary == "periodic":
                        d[i, j % n] += sign * w
                    elif 0 <= j < n:
                        d[i, j] += sign * w
        return d / g.spacing

    @cached_property
    def annihilation(self) -> np.ndarray:
        if not isinstance(self.kind, Ladder):
            raise UnsupportedExpression("only ladder representations have a ladder operator")
        return np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), k=1).astype(complex)

    @cached_property
    def Q(self) -> "Operator":
        k = self.kind
        if isinstance(k, Grid):
            return Operator(np.diag(self.points).astype(complex), self)
        if isinstance(k, Ladder):
            a = self.annihilation
            return Operator(math.sqrt(self.hbar / (2 * k.mass * k.omega)) * (a + a.conj().T), self)
        raise UnsupportedExpression("abstract representations have no position operator")

    @cached_property
    def P(self) -> "Operator":
        k = self.kind
        if isinstance(k, Grid):
            return Operator(-1j * self.hbar * self.derivative_matrix, self)
        if isinstance(k, Ladder):
            a = self.annihilation
            return Operator(1j * math.sqrt(k.mass * k.omega * self.hbar / 2) * (a.conj().T - a), self)
        raise UnsupportedExpression("abstract representations have no momentum operator")

    @cached_property
    def identity(self) -> "Operator":
        return Operator(np.eye(self.dim, dtype=complex), self)

    def zero(self) -> "Operator":
        return Operator(np.zeros((self.dim, self.dim), dtype=complex), self)

    def basis_ket(self, index: int) -> "Ket":
        v = np.zeros(self.dim, dtype=complex)
        v[index] = 1.0
        return Ket(v, self)


def build_representation(kind: Kind, hbar: float = 1.0, interior_margin: int = None) -> Representation:
    """Validate parameters and return a representation.

    Raises :class:`InvalidSpec` for degenerate grids, ``dim < 2`` ladders and
    non-positive physical constants.
    """
    return Representation(kind, hbar, interior_margin)


def grid(n_points, q_min, q_max, boundary="dirichlet", fd_order=2, hbar=1.0, interior_margin=None):
    return build_representation(Grid(n_points, q_min, q_max, boundary, fd_order), hbar, interior_margin)


def ladder(dim, mass=1.0, omega=1.0, hbar=1.0, interior_margin=None):
    return build_representation(Ladder(dim, mass, omega), hbar, interior_margin)


def abstract(dim, hbar=1.0):
    return build_representation(Abstract(dim), hbar)


# ---------------------------------------------------------------------------
# operators and kets
# ---------------------------------------------------------------------------

def _frozen(array, ndim):
    a = np.array(array, dtype=complex)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Operator:
    matrix: np.ndarray
    rep: Representation

    def __post_init__(self):
        m = _frozen(self.matrix, 2)
        if m.shape != (self.rep.dim, self.rep.dim):
            raise MismatchedRep(f"matrix shape {m.shape} does not match dimension {self.rep.dim}")
        object.__setattr__(self, "matrix", m)

    def _other(self, other: "Operator") -> np.ndarray:
        if other.rep != self.rep:
            raise MismatchedRep("operators belong to different representations")
        return other.matrix

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + self._other(other), self.rep)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix - self._other(other), self.rep)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.rep)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, (Operator, Ket)):
            return NotImplemented
        return Operator(complex(scalar) * self.matrix, self.rep)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return Operator(self.matrix / complex(scalar), self.rep)

    def __matmul__(self, other):
        if isinstance(other, Ket):
            if other.rep != self.rep:
                raise MismatchedRep("ket and operator belong to different representations")
            return Ket(self.matrix @ other.vector, self.rep)
        return Operator(self.matrix @ self._other(other), self.rep)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.rep)

    def interior(self, margin: int = None) -> np.ndarray:
        s = self.rep.interior(margin)
        return self.matrix[s, s]

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_defect() <= tol

    def to_json(self) -> list:
        """Row-major nested list of ``[re, im]`` pairs."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]


@dataclass(frozen=True, eq=False)
class Ket:
    vector: np.ndarray
    rep: Representation

    def __post_init__(self):
        v = _frozen(self.vector, 1)
        if v.shape != (self.rep.dim,):
            raise MismatchedRep(f"vector length {v.shape[0]} does not match dimension {self.rep.dim}")
        object.__setattr__(self, "vector", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def inner(self, other: "Ket") -> complex:
        """``<self|other>``"""
        if other.rep != self.rep:
            raise MismatchedRep("kets belong to different representations")
        return complex(np.vdot(self.vector, other.vector))

    def normalized(self) -> "Ket":
        n = self.norm()
        if n == 0:
            raise ZeroKet("cannot normalize the zero ket")
        return Ket(self.vector / n, self.rep)

    def __add__(self, other: "Ket") -> "Ket":
        if other.rep != self.rep:
            raise MismatchedRep("kets belong to different representations")
        return Ket(self.vector + other.vector, self.rep)

    def __sub__(self, other: "Ket") -> "Ket":
        return self + (-1) * other

    def __mul__(self, scalar) -> "Ket":
        return Ket(complex(scalar) * self.vector, self.rep)

    __rmul__ = __mul__


def coherent_state(rep: Representation, q0: float = 0.0, p0: float = 0.0) -> Ket:
    """Truncated Ladder coherent state centred on ``(q0, p0)``, renormalized.

    ``alpha = sqrt(m w / 2 hbar) q0 + i p0 / sqrt(2 m w hbar)`` and the Fock
    amplitudes are ``alpha^n / sqrt(n!)``, built by recurrence.
    """
    kind = rep.kind
    if not isinstance(kind, Ladder):
        raise InvalidSpec("coherent states need a Ladder representation")
    mw = kind.mass * kind.omega
    alpha = math.sqrt(mw / (2 * rep.hbar)) * q0 + 1j * p0 / math.sqrt(2 * mw * rep.hbar)
    amp = np.empty(rep.dim, dtype=complex)
    amp[0] = 1.0
    for n in range(1, rep.dim):
        amp[n] = amp[n - 1] * alpha / math.sqrt(n)
    return Ket(amp, rep).normalized()


def commutator(a: Operator, b: Operator) -> Operator:
    """``AB - BA``"""
    if a.rep != b.rep:
        raise MismatchedRep("commutator of operators in different representations")
    return Operator(a.matrix @ b.matrix - b.matrix @ a.matrix, a.rep)


def expectation(psi: Ket, a: Operator) -> complex:
    """Normalized expectation ``<psi|A|psi> / <psi|psi>``."""
    if psi.rep != a.rep:
        raise MismatchedRep("ket and operator belong to different representations")
    nrm = np.vdot(psi.vector, psi.vector).real
    if nrm == 0:
        raise ZeroKet("expectation value of the zero ket")
    return complex(np.vdot(psi.vector, a.matrix @ psi.vector) / nrm)


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Term:
    coef: complex
    qpow: int = 0
    ppow: int = 0
    # non-polynomial functions of q, kept as nodes and evaluated on the grid
    opaque: tuple = field(default=())

    def times(self, other: "_Term") -> "_Term":
        return _Term(self.coef * other.coef, self.qpow + other.qpow, self.ppow + other.ppow,
                     self.opaque + other.opaque)


def _product(left, right):
    return [a.times(b) for a in left for b in right]


class _Expander:
    """Expand an expression into ``coef * f(q) * q^a * p^b`` terms."""

    def __init__(self, q: str, p: str, canonical: frozenset, params: Mapping, allow_opaque: bool):
        self.q, self.p = q, p
        self.others = canonical - {q, p}
        self.params = params
        self.allow_opaque = allow_opaque

    def number(self, node: Node) -> complex:
        try:
            return complex(eval_node(node, self.params))
        except ZeroDivisionError as exc:
            raise UnsupportedExpression(str(exc)) from None

    def expand(self, node: Node) -> list:
        syms = free_symbols(node)
        if syms & self.others:
            raise UnsupportedExpression(
                f"expression uses {sorted(syms & self.others)[0]!r}; matrix representations hold one canonical pair")
        if not syms & {self.q, self.p}:
            return [_Term(self.number(node))]
        if isinstance(node, Sym):
            return [_Term(1.0, 1, 0)] if node.name == self.q else [_Term(1.0, 0, 1)]
        if isinstance(node, Sum):
            return [t for child in node.terms for t in self.expand(child)]
        if isinstance(node, Product):
            out = [_Term(1.0)]
            for f in node.factors:
                out = _product(out, self.expand(f))
            return out
        if isinstance(node, Pow):
            base = self.expand(node.base)
            out = [_Term(1.0)]
            for _ in range(node.exponent):
                out = _product(out, base)
            return out
        if isinstance(node, Quot):
            scale = 1.0 / self.number(node.den)
            return [_Term(t.coef * scale, t.qpow, t.ppow, t.opaque) for t in self.expand(node.num)]
        if isinstance(node, Fn):
            if self.p in syms:
                raise UnsupportedExpression(f"{node.kind}() of the momentum is not quantizable")
            if not self.allow_opaque:
                raise UnsupportedExpression(
                    f"{node.kind}() of the coordinate needs a grid representation")
            return [_Term(1.0, opaque=(node,))]
        raise TypeError(node)


def weyl_ordered(Q: np.ndarray, P: np.ndarray, a: int, b: int) -> np.ndarray:
    """Average of every distinct word with ``a`` copies of Q and ``b`` of P."""
    n = a + b
    dim = Q.shape[0]
    if n == 0:
        return np.eye(dim, dtype=complex)
    total = np.zeros((dim, dim), dtype=complex)
    words = list(itertools.combinations(range(n), a))
    for q_slots in words:
        slots = set(q_slots)
        m = Q if 0 in slots else P
        for i in range(1, n):
            m = m @ (Q if i in slots else P)
        total += m
    return total / len(words)


def quantize(e: Expr, rep: Representation, params: Mapping[str, float] | None = None) -> Operator:
    """Map a phase-space function to an operator with Weyl-symmetric ordering.

    The expression may use the first canonical pair of its space plus any
    parameters (and ``t``/``E``) bound in ``params``.  Polynomials in ``q`` and
    ``p`` work in every representation; on a grid, arbitrary functions of
    ``q`` are also accepted, alone or multiplied by a single power of ``p``
    (symmetrized as ``(F P + P F) / 2``).
    """
    if not rep.has_canonical_pair:
        raise UnsupportedExpression("abstract representations cannot quantize expressions")
    space = e.space
    q, p = space.coordinates[0], space.momenta[0]
    canonical = frozenset(space.coordinates + space.momenta)
    on_grid = isinstance(rep.kind, Grid)
    terms = _Expander(q, p, canonical, dict(params or {}), on_grid).expand(e.node)

    Q, P = rep.Q.matrix, rep.P.matrix
    polynomial: dict = {}
    opaque: dict = {}
    for t in terms:
        if t.coef == 0:
            continue
        if t.opaque:
            key = (t.opaque, t.qpow, t.ppow)
            opaque[key] = opaque.get(key, 0) + t.coef
        else:
            polynomial[(t.qpow, t.ppow)] = polynomial.get((t.qpow, t.ppow), 0) + t.coef

    out = np.zeros((rep.dim, rep.dim), dtype=complex)
    for (a, b), c in sorted(polynomial.items()):
        if c != 0:
            out += c * weyl_ordered(Q, P, a, b)
    for (nodes, a, b), c in opaque.items():
        if b > 1:
            raise UnsupportedExpression("non-polynomial coordinate dependence times p^n, n > 1")
        env = dict(params or {})
        env[q] = rep.points
        f = np.ones(rep.dim, dtype=complex) * rep.points ** a
        for node in nodes:
            f = f * np.asarray(eval_node(node, env))
        F = np.diag(f)
        out += c * (F if b == 0 else (F @ P + P @ F) / 2)
    return Operator(out, rep)
