"""Commutator / Poisson-bracket correspondence checks.

``check_correspondence`` measures how far ``[U, V]`` is from
``i hbar * quantize({u, v})``.  The identity is exact for operands of degree
at most two in ``q, p`` (Weyl ordering) and fails at order ``hbar^3`` beyond
that, which the report makes visible instead of hiding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple

import numpy as np

from .errors import DegeneratePair
from .hilbert import Representation, commutator, quantize
from .symbolic import Expr, equal_numeric, poisson_bracket, polynomial_degree


@dataclass(frozen=True)
class CorrespondenceReport:
    max_interior_deviation: float
    degrees: Tuple[object, object]
    tolerance: float
    margin: int
    passed: bool


@dataclass(frozen=True)
class OmegaEstimate:
    omega: complex
    residual: float
    pure_imaginary_defect: float


def _degree(e: Expr):
    space = e.space
    return polynomial_degree(e.node, (space.coordinates[0], space.momenta[0]))


def check_margin(rep: Representation, total_degree) -> int:
    """Interior margin for a commutator of total degree ``total_degree``.

    A product of ``k`` banded canonical matrices feels the truncated edge up to
    ``ceil(k / 2)`` band-widths inward, so the block shrinks with the degree.
    """
    if total_degree is None or total_degree < 2:
        return rep.interior_margin
    return rep.interior_margin * math.ceil(total_degree / 2)


def _bracket_pair(u: Expr, v: Expr, rep: Representation, params):
    U = quantize(u, rep, params)
    V = quantize(v, rep, params)
    W = quantize(poisson_bracket(u, v), rep, params)
    du, dv = _degree(u), _degree(v)
    total = None if du is None or dv is None else du + dv
    margin = check_margin(rep, total)
    s = rep.interior(margin)
    return commutator(U, V).matrix[s, s], W.matrix[s, s], (du, dv), margin


def check_correspondence(u: Expr, v: Expr, rep: Representation, tol: float = 1e-9,
                         params: Mapping[str, float] | None = None) -> CorrespondenceReport:
    """Compare ``[quantize(u), quantize(v)]`` with ``i hbar quantize({u, v})``."""
    C, W, degrees, margin = _bracket_pair(u, v, rep, params)
    deviation = float(np.max(np.abs(C - 1j * rep.hbar * W), initial=0.0))
    return CorrespondenceReport(deviation, degrees, tol, margin, deviation <= tol)


def estimate_omega(pairs: Sequence[Tuple[Expr, Expr]], rep: Representation,
                   params: Mapping[str, float] | None = None) -> OmegaEstimate:
    """Least-squares scalar ``omega`` with ``[U_i, V_i] ~ omega * quantize({u_i, v_i})``.

    Real and imaginary parts of every interior entry are stacked into one real
    system in the unknowns ``(Re omega, Im omega)``.
    """
    rows, rhs = [], []
    for u, v in pairs:
        bracket = poisson_bracket(u, v)
        if equal_numeric(bracket, bracket.space.const(0)):
            raise DegeneratePair(f"{{{u}, {v}}} vanishes identically")
        C, W, _, _ = _bracket_pair(u, v, rep, params)
        w, c = W.ravel(), C.ravel()
        # omega * w = (x + i y)(wr + i wi) -> real: x wr - y wi, imag: x wi + y wr
        rows.append(np.column_stack([w.real, -w.imag]))
        rows.append(np.column_stack([w.imag, w.real]))
        rhs.extend([c.real, c.imag])
    if not rows:
        raise ValueError("estimate_omega needs at least one pair")
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    (x, y), *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.linalg.norm(A @ np.array([x, y]) - b))
    return OmegaEstimate(complex(x, y), residual, abs(float(x)))
