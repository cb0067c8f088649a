"""Unitary time evolution and the time-displacement operator.

Propagators are built from Hermitian eigendecompositions, so both schemes
are unitary up to rounding: ``eig_exp`` exponentiates the spectrum exactly,
``crank_nicolson`` applies the Cayley map ``(1 - i h H/2hbar)/(1 + i h H/2hbar)``
to it.  Limits ``delta t -> 0`` are taken on geometric sequences of steps and
Richardson-extrapolated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (InvalidInterval, MismatchedRep, NonHermitianHamiltonian,
                     NonUnitaryPropagator, NonuniformGrid, TooFewSamples)
from .hilbert import Ket, Operator, Representation, quantize
from .symbolic import Expr
from .symbolic.expr import TIME

SCHEMES = ("eig_exp", "crank_nicolson")
HERMITIAN_TOL = 1e-12


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def _check_hermitian(H: Operator, rep: Representation, tol: float = HERMITIAN_TOL) -> Operator:
    if H.rep != rep:
        raise MismatchedRep("Hamiltonian sample does not match the schedule representation")
    defect = H.hermiticity_defect()
    if defect > tol:
        raise NonHermitianHamiltonian(f"Hamiltonian is not Hermitian (max |H - H^+| = {defect:.3e})")
    return H


@dataclass(frozen=True, eq=False)
class ConstantSchedule:
    H: Operator
    origin: Optional[Expr] = None

    def __post_init__(self):
        _check_hermitian(self.H, self.H.rep)

    @property
    def rep(self) -> Representation:
        return self.H.rep

    def at(self, t: float) -> Operator:
        return self.H


@dataclass(frozen=True, eq=False)
class SampledSchedule:
    sample: Callable[[float], Operator]
    rep: Representation
    interval: Tuple[float, float] = (-math.inf, math.inf)
    origin: Optional[Expr] = None

    def at(self, t: float) -> Operator:
        lo, hi = self.interval
        slack = 1e-12 * max(1.0, abs(lo) if math.isfinite(lo) else 1.0, abs(hi) if math.isfinite(hi) else 1.0)
        if not (lo - slack <= t <= hi + slack):
            raise InvalidInterval(f"t = {t} outside the schedule interval {self.interval}")
        return _check_hermitian(self.sample(t), self.rep)


HamiltonianSchedule = Union[ConstantSchedule, SampledSchedule]


def schedule_from_expr(e: Expr, rep: Representation, params: Mapping[str, float] | None = None,
                       interval: Tuple[float, float] = (-math.inf, math.inf)) -> HamiltonianSchedule:
    """Quantize ``e`` once, or at every sampled time when it depends on ``t``."""
    params = dict(params or {})
    if TIME not in e.free_symbols:
        return ConstantSchedule(quantize(e, rep, params), origin=e)

    def sample(t):
        return quantize(e, rep, {**params, TIME: t})

    return SampledSchedule(sample, rep, interval, origin=e)


# ---------------------------------------------------------------------------
# propagators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Propagator:
    T: Operator
    t0: float
    t1: float
    scheme: str
    steps: int

    def apply(self, psi: Ket) -> Ket:
        return self.T @ psi


def _spectral(H: np.ndarray, fn) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * fn(w)) @ v.conj().T


def _step_factor(H: np.ndarray, h: float, hbar: float, scheme: str) -> np.ndarray:
    if scheme == "eig_exp":
        return _spectral(H, lambda w: np.exp(-1j * w * h / hbar))
    return _spectral(H, lambda w: (1 - 0.5j * w * h / hbar) / (1 + 0.5j * w * h / hbar))


def propagate(H: HamiltonianSchedule, t0: float, t1: float, scheme: str = "eig_exp",
              steps: int = 1) -> Propagator:
    """Propagator from ``t0`` to ``t1``.

    Constant schedules are diagonalized once.  Sampled schedules multiply
    ``steps`` factors, each built from ``H`` at the step midpoint, later
    times on the left.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 < t0:
        raise InvalidInterval(f"need t0 <= t1, got [{t0}, {t1}]")
    if not isinstance(steps, int) or steps < 1:
        raise InvalidInterval(f"steps must be a positive integer, got {steps!r}")
    rep = H.rep
    hbar = rep.hbar
    span = t1 - t0
    if isinstance(H, ConstantSchedule):
        if scheme == "eig_exp":
            T = _spectral(H.H.matrix, lambda w: np.exp(-1j * w * span / hbar))
        else:
            h = span / steps
            T = _spectral(H.H.matrix,
                          lambda w: ((1 - 0.5j * w * h / hbar) / (1 + 0.5j * w * h / hbar)) ** steps)
        return Propagator(Operator(T, rep), t0, t1, scheme, steps)
    h = span / steps
    T = np.eye(rep.dim, dtype=complex)
    for k in range(steps):
        mid = t0 + (k + 0.5) * h
        T = _step_factor(H.at(mid).matrix, h, hbar, scheme) @ T
    return Propagator(Operator(T, rep), t0, t1, scheme, steps)


@dataclass(frozen=True)
class UnitarityReport:
    passed: bool
    left_deviation: float
    right_deviation: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return max(self.left_deviation, self.right_deviation)


def _matrix(x) -> np.ndarray:
    if isinstance(x, Propagator):
        return x.T.matrix
    if isinstance(x, Operator):
        return x.matrix
    return np.asarray(x, dtype=complex)


def check_unitarity(T, tol: float = 1e-10) -> UnitarityReport:
    """Elementwise distance of ``T^+ T`` and ``T T^+`` from the identity."""
    m = _matrix(T)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("unitarity check needs a square matrix")
    eye = np.eye(m.shape[0])
    left = float(np.max(np.abs(m.conj().T @ m - eye)))
    right = float(np.max(np.abs(m @ m.conj().T - eye)))
    return UnitarityReport(left <= tol and right <= tol, left, right, tol)


# ---------------------------------------------------------------------------
# phase gauge and the time-displacement operator
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class PhaseGauge:
    """Time-dependent phase rate ``alpha(t)``; the factor over a step is ``exp(i theta)``."""

    alpha: Callable[[float], float]

    @classmethod
    def constant(cls, rate: float) -> "PhaseGauge":
        return cls(_ConstantRate(float(rate)))

    def theta(self, t0: float, t1: float) -> float:
        """``integral of alpha`` over ``[t0, t1]`` (8-point Gauss-Legendre)."""
        if isinstance(self.alpha, _ConstantRate):
            return self.alpha.rate * (t1 - t0)
        half = 0.5 * (t1 - t0)
        mid = 0.5 * (t1 + t0)
        values = np.array([float(self.alpha(mid + half * x)) for x in _GL_NODES])
        if not np.all(np.isfinite(values)):
            raise ValueError("gauge rate is not finite on the interval")
        return float(half * np.dot(_GL_WEIGHTS, values))


@dataclass(frozen=True)
class _ConstantRate:
    rate: float

    def __call__(self, t: float) -> float:
        return self.rate


def gauge_transform(prop: Propagator, gauge: PhaseGauge) -> Propagator:
    """Multiply ``T`` by ``exp(i theta)`` accumulated over the propagator's interval."""
    phase = np.exp(1j * gauge.theta(prop.t0, prop.t1))
    return Propagator(phase * prop.T, prop.t0, prop.t1, prop.scheme, prop.steps)


def check_geometric(deltas: Sequence[float]) -> List[float]:
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ValueError("need at least three step sizes for extrapolation")
    for a, b in zip(deltas, deltas[1:]):
        if not (a > 0 and abs(b - a / 2) <= 1e-12 * a):
            raise ValueError(f"step sizes must halve successively, got {a} then {b}")
    return deltas


def richardson(values: Sequence[np.ndarray]) -> Tuple[np.ndarray, float]:
    """Extrapolate estimates with error ``c1 h + c2 h^2 + ...`` on halving ``h``.

    Returns the final diagonal entry and the max-abs change from the previous
    diagonal entry as an error estimate.
    """
    table = [np.asarray(values[0])]
    prev_diag = table[0]
    last_change = math.inf
    for k in range(1, len(values)):
        row = [np.asarray(values[k])]
        for j in range(1, k + 1):
            factor = 2.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[j - 1]) / (factor - 1))
        last_change = float(np.max(np.abs(row[-1] - prev_diag)))
        prev_diag = row[-1]
        table = row
    return table[-1], last_change


@dataclass(frozen=True, eq=False)
class DisplacementEstimate:
    d_t: Operator
    error_estimate: float
    raw: Tuple[Operator, ...] = field(default=())


def _displacement_quotients(family: Callable[[float], object], deltas, rep, gauge, t0):
    eye = np.eye(rep.dim)
    quotients = []
    for d in deltas:
        T = _matrix(family(d))
        if gauge is not None:
            T = T * np.exp(1j * gauge.theta(t0, t0 + d))
        quotients.append((T - eye) / d)
    return quotients


def time_displacement(H: HamiltonianSchedule, t0: float, deltas: Sequence[float],
                      gauge: PhaseGauge | None = None, scheme: str = "eig_exp") -> DisplacementEstimate:
    """``lim (T(t0, t0 + dt) e^{i theta} - 1) / dt`` by Richardson extrapolation.

    With no gauge this tends to ``-i H(t0) / hbar``; a gauge adds ``i alpha(t0)``.
    """
    deltas = check_geometric(deltas)
    rep = H.rep
    quotients = _displacement_quotients(lambda d: propagate(H, t0, t0 + d, scheme, 1), deltas, rep, gauge, t0)
    limit, err = richardson(quotients)
    return DisplacementEstimate(Operator(limit, rep), err, tuple(Operator(q, rep) for q in quotients))


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    deviation: float
    tolerance: float


def check_anti_hermitian(d, tol: float = 1e-8) -> CheckReport:
    m = _matrix(d.d_t if isinstance(d, DisplacementEstimate) else d)
    dev = float(np.max(np.abs(m + m.conj().T)))
    return CheckReport(dev <= tol, dev, tol)


# ---------------------------------------------------------------------------
# Heisenberg transport
# ---------------------------------------------------------------------------

def heisenberg_transport(S: Operator, T, tol: float = 1e-8) -> Operator:
    """``T S T^{-1}`` with the inverse taken as ``T^+`` after a unitarity check."""
    op = T.T if isinstance(T, Propagator) else T
    if op.rep != S.rep:
        raise MismatchedRep("operator and propagator belong to different representations")
    report = check_unitarity(op, tol)
    if not report.passed:
        raise NonUnitaryPropagator(f"propagator deviates from unitarity by {report.deviation:.3e}")
    m = op.matrix
    return Operator(m @ S.matrix @ m.conj().T, S.rep)


@dataclass(frozen=True, eq=False)
class HeisenbergRateReport:
    rate: Operator
    generator_side: Operator
    deviation: float
    tolerance: float
    passed: bool


def check_heisenberg_rate(S: Operator, H: HamiltonianSchedule, t0: float, deltas: Sequence[float],
                          tol: float = 1e-8, margin: int | None = None,
                          scheme: str = "eig_exp") -> HeisenbergRateReport:
    """Compare the extrapolated ``(T S T^+ - S) / dt`` with ``d_t S - S d_t``.

    ``margin`` restricts the comparison to an interior block.
    """
    deltas = check_geometric(deltas)
    if S.rep != H.rep:
        raise MismatchedRep("observable and Hamiltonian belong to different representations")
    quotients = []
    for d in deltas:
        St = heisenberg_transport(S, propagate(H, t0, t0 + d, scheme, 1))
        quotients.append((St.matrix - S.matrix) / d)
    rate, _ = richardson(quotients)
    d_t = time_displacement(H, t0, deltas, scheme=scheme).d_t.matrix
    generator = d_t @ S.matrix - S.matrix @ d_t
    diff = rate - generator
    if margin is not None:
        s = S.rep.interior(margin)
        diff = diff[s, s]
    dev = float(np.max(np.abs(diff)))
    return HeisenbergRateReport(Operator(rate, S.rep), Operator(generator, S.rep), dev, tol, dev <= tol)


# ---------------------------------------------------------------------------
# Hamiltonian reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    H_recovered: Operator
    trace_offset: float
    deviation: Optional[float]
    error_estimate: float


def reconstruct_hamiltonian(family: Callable[[float], object], deltas: Sequence[float], rep: Representation,
                            hbar: float | None = None, gauge: PhaseGauge | None = None,
                            reference: Operator | None = None, t0: float = 0.0) -> ReconstructionReport:
    """Recover ``H = i hbar d_t`` from a family ``dt -> T(t0, t0 + dt)``.

    With a ``reference`` the constant offset ``b * 1`` is fixed by matching
    traces and the remaining max-abs deviation is reported; without one the
    raw operator is returned and ``deviation`` is None.
    """
    deltas = check_geometric(deltas)
    hbar = rep.hbar if hbar is None else hbar
    quotients = _displacement_quotients(family, deltas, rep, gauge, t0)
    d_t, err = richardson(quotients)
    H_rec = 1j * hbar * d_t
    if reference is None:
        return ReconstructionReport(Operator(H_rec, rep), 0.0, None, hbar * err)
    if reference.rep != rep:
        raise MismatchedRep("reference Hamiltonian belongs to a different representation")
    offset = float(np.real(np.trace(H_rec - reference.matrix))) / rep.dim
    dev = float(np.max(np.abs(H_rec - offset * np.eye(rep.dim) - reference.matrix)))
    return ReconstructionReport(Operator(H_rec, rep), offset, dev, hbar * err)


# ---------------------------------------------------------------------------
# Schroedinger residual
# ---------------------------------------------------------------------------

def schrodinger_residual(trajectory: Sequence[Tuple[float, Ket]], H: HamiltonianSchedule,
                         hbar: float | None = None) -> float:
    """Max over interior samples of ``|i hbar dpsi/dt - H psi| / |psi|``.

    ``dpsi/dt`` is the fourth-order central difference, so the two samples at
    each end are not scored.
    """
    if len(trajectory) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(trajectory)}")
    hbar = H.rep.hbar if hbar is None else hbar
    times = np.array([float(t) for t, _ in trajectory])
    steps = np.diff(times)
    h = steps[0]
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * abs(h):
        raise NonuniformGrid("trajectory times must be strictly increasing and evenly spaced")
    for _, psi in trajectory:
        if psi.rep != H.rep:
            raise MismatchedRep("trajectory ket does not match the Hamiltonian representation")
    psis = np.array([psi.vector for _, psi in trajectory])
    worst = 0.0
    for j in range(2, len(trajectory) - 2):
        dpsi = (psis[j - 2] - 8 * psis[j - 1] + 8 * psis[j + 1] - psis[j + 2]) / (12 * h)
        r = 1j * hbar * dpsi - H.at(times[j]).matrix @ psis[j]
        worst = max(worst, float(np.linalg.norm(r) / np.linalg.norm(psis[j])))
    return worst
