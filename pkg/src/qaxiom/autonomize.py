"""Extended phase space for explicitly time-dependent Hamiltonians.

``H(q, p, t)`` is embedded as the autonomous ``H~ = H - E`` on a space with
one more canonical pair, ``q0 = t`` and ``p0 = -E``.  Classical states keep
``E`` itself (not ``p0``); the sign flip happens only in :func:`rhs_function`.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, List, Mapping, Union

import numpy as np

from .errors import EContamination, MismatchedSpace, NonfiniteState
from .symbolic import Expr, PhaseSpace, compile_exprs, differentiate, equal_numeric, poisson_bracket
from .symbolic.calculus import diff_node
from .symbolic.expr import ENERGY, TIME, Sym, add, neg, substitute

IDENTITY_TRIALS = 200


@dataclass(frozen=True)
class ExtendedSystem:
    original: Expr
    extended_space: PhaseSpace
    H_tilde: Expr

    @property
    def dof(self) -> int:
        """Degrees of freedom of the original system."""
        return self.original.space.dof

    def to_extended(self, e: Expr) -> Expr:
        """Rewrite an expression over the original space (t, E allowed) in q0, p0."""
        if e.space != self.original.space:
            raise MismatchedSpace("expression does not live in the original phase space")
        mapping = {TIME: Sym("q0"), ENERGY: neg(Sym("p0"))}
        return Expr(substitute(e.node, mapping), self.extended_space)


def autonomize(H: Expr) -> ExtendedSystem:
    """Embed ``H(q, p, t)`` as ``H~(q~, p~) = H - E`` with ``q0 = t``, ``p0 = -E``.

    A Hamiltonian without ``t`` is accepted; ``q0`` is then cyclic.  The
    embedding identities ``dH~/dp0 == 1`` and ``dH~/dq0 == dH/dt`` are checked
    numerically before returning.
    """
    space = H.space
    if ENERGY in H.free_symbols:
        raise EContamination("the Hamiltonian to autonomize already depends on E")
    if space.index_base != 1:
        raise ValueError("autonomize expects an original space indexed from 1")
    ext = PhaseSpace(space.dof + 1, parameters=space.parameters, index_base=0)
    body = substitute(H.node, {TIME: Sym("q0")})
    H_tilde = Expr(add(body, Sym("p0")), ext)
    system = ExtendedSystem(H, ext, H_tilde)

    one = ext.const(1)
    if not equal_numeric(differentiate(H_tilde, "p0"), one, trials=IDENTITY_TRIALS):
        raise ArithmeticError("embedding identity dH~/dp0 == 1 failed")
    dH_dt = Expr(substitute(diff_node(H.node, TIME), {TIME: Sym("q0")}), ext)
    if not equal_numeric(differentiate(H_tilde, "q0"), dH_dt, trials=IDENTITY_TRIALS):
        raise ArithmeticError("embedding identity dH~/dq0 == dH/dt failed")
    return system


# ---------------------------------------------------------------------------
# classical states and Hamilton's equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ClassicalState:
    """Point ``(q_1..q_M, p_1..p_M[, t, E])`` at flow time ``time``."""

    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("state values must be a flat vector")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


System = Union[Expr, ExtendedSystem]


def state_length(system: System) -> int:
    if isinstance(system, ExtendedSystem):
        return 2 * system.dof + 2
    return 2 * system.space.dof


def rhs_function(system: System, params: Mapping[str, float] | None = None) -> Callable:
    """Compiled ``f(time, y) -> dy/dtime`` for Hamilton's equations of ``system``."""
    params = dict(params or {})
    if isinstance(system, ExtendedSystem):
        Ht = system.H_tilde
        M = system.dof
        qs = [f"q{r}" for r in range(1, M + 1)]
        ps = [f"p{r}" for r in range(1, M + 1)]
        # t' = dH~/dp0 (= 1), E' = -p0' = dH~/dq0
        exprs = ([differentiate(Ht, p) for p in ps] + [-differentiate(Ht, q) for q in qs]
                 + [differentiate(Ht, "p0"), differentiate(Ht, "q0")])
        f = compile_exprs(exprs, qs + ps + ["q0", "p0"], params)

        def rhs(time, y):
            return np.array(f(*y[:2 * M], y[2 * M], -y[2 * M + 1]))

        return rhs

    space = system.space
    qs, ps = list(space.coordinates), list(space.momenta)
    exprs = [differentiate(system, p) for p in ps] + [-differentiate(system, q) for q in qs]
    if space.has_time and TIME not in params:
        f = compile_exprs(exprs, qs + ps + [TIME], params)

        def rhs(time, y):
            return np.array(f(*y, time))
    else:
        f = compile_exprs(exprs, qs + ps, params)

        def rhs(time, y):
            return np.array(f(*y))

    return rhs


def hamilton_rhs(system: System, s: ClassicalState, params: Mapping[str, float] | None = None) -> np.ndarray:
    """``(dH/dp, -dH/dq)`` at ``s``; extended systems append ``(t', E')``."""
    if s.values.shape[0] != state_length(system):
        raise ValueError(f"state has {s.values.shape[0]} components, system needs {state_length(system)}")
    return rhs_function(system, params)(s.time, s.values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    step: float
    states: List[ClassicalState]
    dof: int
    extended: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def array(self) -> np.ndarray:
        return np.array([s.values for s in self.states])

    def header(self) -> List[str]:
        cols = ["t"] + [f"q{r}" for r in range(1, self.dof + 1)] + [f"p{r}" for r in range(1, self.dof + 1)]
        return cols + (["E"] if self.extended else [])

    def rows(self) -> List[List[float]]:
        out = []
        M = self.dof
        for s in self.states:
            v = s.values
            if self.extended:
                out.append([v[2 * M]] + list(v[:2 * M]) + [v[2 * M + 1]])
            else:
                out.append([s.time] + list(v))
        return out

    def to_csv(self, target=None) -> str:
        """Write ``t,q1..qM,p1..pM[,E]`` rows at full double precision.

        For extended trajectories the ``t`` column is the state's own time
        coordinate.  Returns the CSV text; also writes it to ``target`` (a path)
        when given.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([repr(float(x)) for x in row])
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def integrate_classical(system: System, s0: ClassicalState, t_end: float, h: float,
                        params: Mapping[str, float] | None = None) -> Trajectory:
    """Fixed-step classical RK4 from ``s0.time`` to ``t_end``.

    ``t_end - s0.time`` must be a whole number of steps.
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"step must be positive, got {h!r}")
    span = t_end - s0.time
    if not span > 0:
        raise ValueError("t_end must lie after the initial time")
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"interval {span} is not a whole number of steps of {h}")
    if s0.values.shape[0] != state_length(system):
        raise ValueError(f"state has {s0.values.shape[0]} components, system needs {state_length(system)}")
    f = rhs_function(system, params)
    y = np.array(s0.values, dtype=float)
    t0 = s0.time
    states = [s0]
    # overflow surfaces as NonfiniteState below rather than as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            t = t0 + k * h
            k1 = f(t, y)
            k2 = f(t + h / 2, y + h / 2 * k1)
            k3 = f(t + h / 2, y + h / 2 * k2)
            k4 = f(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise NonfiniteState(f"state became non-finite at step {k + 1} (t = {t + h})")
            states.append(ClassicalState(y, t0 + (k + 1) * h))
    if isinstance(system, ExtendedSystem):
        return Trajectory(h, states, system.dof, extended=True)
    return Trajectory(h, states, system.space.dof)


def extend_state(system: ExtendedSystem, s: ClassicalState, params: Mapping[str, float] | None = None) -> ClassicalState:
    """Append ``t = s.time`` and ``E = H(q, p, t)`` so that ``H~ = 0`` initially."""
    H = system.original
    space = H.space
    args = list(space.coordinates) + list(space.momenta) + ([TIME] if space.has_time else [])
    f = compile_exprs([H], args, params)
    vals = list(s.values) + ([s.time] if space.has_time else [])
    energy = f(*vals)[0]
    return ClassicalState(np.concatenate([s.values, [s.time, energy]]), s.time)


def project(traj: Trajectory) -> Trajectory:
    """Drop ``(t, E)`` from an extended trajectory."""
    if not traj.extended:
        return traj
    M = traj.dof
    states = [ClassicalState(s.values[:2 * M], s.time) for s in traj.states]
    return Trajectory(traj.step, states, M)


def energy_defect(system: ExtendedSystem, traj: Trajectory, params: Mapping[str, float] | None = None) -> float:
    """Max over the trajectory of ``|E - H(q, p, t)|``."""
    M = system.dof
    args = [f"q{r}" for r in range(1, M + 1)] + [f"p{r}" for r in range(1, M + 1)] + ["q0"]
    f = compile_exprs([system.to_extended(system.original)], args, params)
    worst = 0.0
    for s in traj.states:
        v = s.values
        worst = max(worst, abs(v[2 * M + 1] - f(*v[:2 * M + 1])[0]))
    return worst


@dataclass(frozen=True)
class FlowReport:
    passed: bool
    deviation: float
    tolerance: float


def observable_flow_check(zeta: Expr, system: ExtendedSystem, traj: Trajectory, tol: float = 1e-6,
                          params: Mapping[str, float] | None = None) -> FlowReport:
    """Compare ``d zeta / dt`` along ``traj`` with ``{zeta, H~}`` at the same points.

    The rate is a fourth-order central difference, so two states at each end
    are skipped.
    """
    if zeta.space != system.extended_space:
        raise MismatchedSpace("zeta must be an expression over the extended phase space")
    if not traj.extended:
        raise ValueError("observable_flow_check needs an extended trajectory")
    if len(traj.states) < 5:
        raise ValueError("need at least five trajectory states")
    M = system.dof
    args = [f"q{r}" for r in range(1, M + 1)] + [f"p{r}" for r in range(1, M + 1)] + ["q0", "p0"]
    f = compile_exprs([zeta, poisson_bracket(zeta, system.H_tilde)], args, params)
    values, rates = [], []
    for s in traj.states:
        v = s.values
        z, b = f(*v[:2 * M], v[2 * M], -v[2 * M + 1])
        values.append(z)
        rates.append(b)
    h = traj.step
    worst = 0.0
    for j in range(2, len(values) - 2):
        fd = (values[j - 2] - 8 * values[j - 1] + 8 * values[j + 1] - values[j + 2]) / (12 * h)
        worst = max(worst, abs(fd - rates[j]))
    return FlowReport(worst <= tol, worst, tol)
