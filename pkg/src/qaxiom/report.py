"""Named verification suites and the JSON report they produce.

A suite is a list of checks.  Each check has a dotted id, a short anchor
describing the identity it exercises, and a thunk returning the measured
deviation together with its default tolerance.  The runner applies
tolerance overrides, times each thunk, and sorts records by id, so report
contents do not depend on execution order.
"""
from __future__ import annotations

import json
import math
import time
import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .autonomize import (ClassicalState, autonomize, energy_defect, extend_state, integrate_classical,
                         observable_flow_check, project)
from .correspondence import check_correspondence, estimate_omega
from .errors import InvalidConfig, QaxiomError, UnknownSuite
from .evolution import (ConstantSchedule, check_anti_hermitian, check_heisenberg_rate,
                        check_unitarity, propagate, reconstruct_hamiltonian, schrodinger_residual,
                        time_displacement)
from .hilbert import Operator, abstract, coherent_state, expectation, ladder, quantize
from .nbody import (ParticleSystem, aggregate, angular_momentum_split, booster_sum, free_evolve,
                    total_angular_momentum)
from .symbolic import PhaseSpace, differentiate, numeric_gap, parse_expr

SUITES = ("lemma1", "omega", "unitarity", "displacement", "heisenberg", "reconstruction",
          "schrodinger", "autonomize", "booster")
SUITE_NAMES = SUITES + ("all",)
DEFAULT_DIMS = (32, 64)
DEFAULT_SEED = 20240101
MIN_DIM = 8


@dataclass(frozen=True)
class SuiteConfig:
    suite: str = "all"
    hbar: float = 1.0
    dims: Tuple[int, ...] = DEFAULT_DIMS
    seed: int = DEFAULT_SEED
    tolerances: Dict[str, float] = field(default_factory=dict)
    out: Optional[str] = None

    def __post_init__(self):
        if self.suite not in SUITE_NAMES:
            raise UnknownSuite(f"unknown suite {self.suite!r}; choose from {', '.join(SUITE_NAMES)}")
        if not (isinstance(self.hbar, (int, float)) and math.isfinite(self.hbar) and self.hbar > 0):
            raise InvalidConfig(f"hbar must be a positive number, got {self.hbar!r}")
        dims = tuple(self.dims)
        if not dims or any(not isinstance(d, int) or d < MIN_DIM for d in dims):
            raise InvalidConfig(f"dims must be integers >= {MIN_DIM}, got {list(dims)}")
        object.__setattr__(self, "dims", dims)
        for key, tol in self.tolerances.items():
            if not (math.isfinite(tol) and tol > 0):
                raise InvalidConfig(f"tolerance for {key!r} must be positive, got {tol!r}")

    def echo(self) -> dict:
        """Config fields that determine the report contents (not the output path)."""
        return {"suite": self.suite, "hbar": self.hbar, "dims": list(self.dims), "seed": self.seed,
                "tolerances": dict(sorted(self.tolerances.items()))}


_CONFIG_KEYS = ("suite", "hbar", "dims", "seed", "out")


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` lines; ``dims`` may repeat, ``tol.<id>`` sets overrides.

    Returns keyword arguments for :class:`SuiteConfig`.  Blank lines and
    lines starting with ``#`` are ignored.
    """
    out: dict = {}
    dims: List[int] = []
    tols: Dict[str, float] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise InvalidConfig(f"line {n}: expected 'key = value', got {raw!r}")
        try:
            if key == "dims":
                dims.extend(int(v) for v in value.replace(",", " ").split())
            elif key.startswith("tol."):
                tols[key[4:]] = float(value)
            elif key == "hbar":
                out["hbar"] = float(value)
            elif key == "seed":
                out["seed"] = int(value)
            elif key in ("suite", "out"):
                out[key] = value
            else:
                raise InvalidConfig(f"line {n}: unknown key {key!r}; known keys: "
                                    f"{', '.join(_CONFIG_KEYS)}, tol.<check id>")
        except ValueError as exc:
            if isinstance(exc, InvalidConfig):
                raise
            raise InvalidConfig(f"line {n}: bad value for {key!r}: {value!r}") from None
    if dims:
        out["dims"] = tuple(dims)
    if tols:
        out["tolerances"] = tols
    return out


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None


# ---------------------------------------------------------------------------
# records and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    id: str
    anchor: str
    run: Callable[[], Tuple[float, float]]
    # passed iff deviation <= tolerance ("le"), > tolerance ("gt") or >= tolerance ("ge")
    comparison: str = "le"


@dataclass(frozen=True)
class CheckRecord:
    id: str
    anchor: str
    deviation: Optional[float]
    tolerance: float
    comparison: str
    passed: bool
    runtime_ms: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self, timings: bool = True) -> dict:
        d = {"id": self.id, "anchor": self.anchor, "deviation": self.deviation, "tolerance": self.tolerance,
             "comparison": self.comparison, "passed": self.passed}
        if self.error is not None:
            d["error"] = self.error
        if timings and self.runtime_ms is not None:
            d["runtime_ms"] = self.runtime_ms
        return d


@dataclass(frozen=True)
class VerificationReport:
    version: str
    config: dict
    checks: Tuple[CheckRecord, ...]

    @property
    def passed(self) -> int:
        return sum(1 for c in self.checks if c.passed)

    @property
    def failed(self) -> int:
        return len(self.checks) - self.passed

    @property
    def exit_code(self) -> int:
        return 0 if self.failed == 0 else 1

    def to_dict(self, timings: bool = True) -> dict:
        return {"version": self.version, "config": self.config,
                "checks": [c.to_dict(timings) for c in self.checks],
                "summary": {"passed": self.passed, "failed": self.failed}}

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, allow_nan=False) + "\n"


def _judge(deviation: float, tol: float, comparison: str) -> bool:
    if not math.isfinite(deviation):
        return False
    if comparison == "gt":
        return deviation > tol
    if comparison == "ge":
        return deviation >= tol
    return deviation <= tol


def _override(tolerances: Dict[str, float], check_id: str) -> Optional[float]:
    """Longest dotted-prefix match of ``check_id`` among the override keys."""
    parts = check_id.split(".")
    for k in range(len(parts), 0, -1):
        key = ".".join(parts[:k])
        if key in tolerances:
            return tolerances[key]
    return None


def plan(config: SuiteConfig) -> List[Check]:
    names = SUITES if config.suite == "all" else (config.suite,)
    checks: List[Check] = []
    for name in names:
        rng = np.random.default_rng([config.seed, zlib.crc32(name.encode())])
        checks.extend(_BUILDERS[name](config, rng))
    ids = [c.id for c in checks]
    if len(set(ids)) != len(ids):
        raise AssertionError("duplicate check ids in suite plan")
    for key in config.tolerances:
        if not any(i == key or i.startswith(key + ".") for i in ids):
            raise InvalidConfig(f"tolerance override {key!r} matches no check in suite {config.suite!r}")
    return sorted(checks, key=lambda c: c.id)


def run_suite(config: SuiteConfig) -> VerificationReport:
    """Run every check of ``config.suite``; failures and errors are recorded, not raised."""
    records = []
    for check in plan(config):
        start = time.perf_counter()
        error = None
        try:
            deviation, tol = check.run()
            deviation = float(deviation)
        except (QaxiomError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            deviation, tol, error = None, math.nan, f"{type(exc).__name__}: {exc}"
        elapsed = round((time.perf_counter() - start) * 1e3, 3)
        override = _override(config.tolerances, check.id)
        if override is not None:
            tol = override
        passed = error is None and _judge(deviation, tol, check.comparison)
        if deviation is not None and not math.isfinite(deviation):
            deviation, error = None, error or "non-finite deviation"
        records.append(CheckRecord(check.id, check.anchor, deviation, None if math.isnan(tol) else tol,
                                   check.comparison, passed, elapsed, error))
    return VerificationReport(__version__, config.echo(), tuple(records))


# ---------------------------------------------------------------------------
# shared fixtures
# ---------------------------------------------------------------------------

def _random_hermitian(rng, dim: int, scale: float) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (a + a.conj().T) / 2
    return h * (scale / np.linalg.norm(h, 2))


def _geometric(first: float, count: int = 5) -> List[float]:
    return [first / 2 ** k for k in range(count)]


SPACE1 = PhaseSpace(1)
LOW_DEGREE = ("q1", "p1", "q1^2", "q1*p1", "p1^2")


def _lemma1(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    for dim in config.dims:
        def exact(dim=dim):
            rep = ladder(dim, hbar=config.hbar)
            worst = 0.0
            for u in LOW_DEGREE:
                for v in LOW_DEGREE:
                    r = check_correspondence(parse_expr(u, SPACE1), parse_expr(v, SPACE1), rep)
                    worst = max(worst, r.max_interior_deviation)
            return worst, 1e-9

        def cubic(dim=dim):
            rep = ladder(dim, hbar=config.hbar)
            r = check_correspondence(parse_expr("q1^3", SPACE1), parse_expr("p1^3", SPACE1), rep)
            return r.max_interior_deviation, 1e-3 * config.hbar ** 3

        checks.append(Check(f"lemma1.exact.dim{dim}", "commutator vs i*hbar*Poisson bracket, degree <= 2", exact))
        checks.append(Check(f"lemma1.cubic.dim{dim}",
                            "expected failure: (q^3, p^3) deviation must exceed tolerance", cubic, "gt"))
    return checks


def _omega(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    pairs = [("q1", "p1"), ("2*q1", "3*p1"), ("q1^2", "p1")]
    for dim in config.dims:
        @lru_cache(maxsize=None)
        def estimate(dim=dim):
            rep = ladder(dim, hbar=config.hbar)
            return estimate_omega([(parse_expr(u, SPACE1), parse_expr(v, SPACE1)) for u, v in pairs], rep)

        checks.append(Check(f"omega.value.dim{dim}", "omega = i*hbar from commutator/bracket pairs",
                            lambda e=estimate: (abs(e().omega - 1j * config.hbar) / config.hbar, 1e-8)))
        checks.append(Check(f"omega.real.dim{dim}", "omega is pure imaginary",
                            lambda e=estimate: (e().pure_imaginary_defect, 1e-9)))
    return checks


def _unitarity(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    for dim in config.dims:
        cases = [(_random_hermitian(rng, dim, rng.uniform(0.1, 10.0)), rng.uniform(1e-3, 0.1)) for _ in range(10)]
        long_steps = [rng.uniform(0.1, 10.0) for _ in cases]

        def run(scheme, steps, dim=dim, cases=cases):
            rep = abstract(dim, config.hbar)
            worst = 0.0
            for (H, dt), big in zip(cases, steps):
                T = propagate(ConstantSchedule(Operator(H, rep)), 0.0, dt if big is None else big, scheme)
                worst = max(worst, check_unitarity(T).deviation)
            return worst

        checks.append(Check(f"unitarity.eig_exp.dim{dim}", "propagator is unitary (T^+ T = T T^+ = 1)",
                            lambda run=run, n=len(cases): (run("eig_exp", [None] * n), 1e-10)))
        checks.append(Check(f"unitarity.crank_nicolson.dim{dim}", "Cayley step is unitary at any step size",
                            lambda run=run, s=long_steps: (run("crank_nicolson", s), 1e-12)))
    return checks


def _displacement(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    for dim in config.dims:
        Hm = _random_hermitian(rng, dim, 1.0)

        @lru_cache(maxsize=None)
        def estimates(dim=dim, Hm=Hm):
            rep = abstract(dim, config.hbar)
            sched = ConstantSchedule(Operator(Hm, rep))
            fine = time_displacement(sched, 0.0, _geometric(1e-2, 5))
            coarse = time_displacement(sched, 0.0, _geometric(2e-1, 3))
            halved = time_displacement(sched, 0.0, _geometric(1e-1, 3))
            return fine, coarse, halved

        def generator(Hm=Hm, estimates=estimates):
            d = estimates()[0].d_t.matrix
            return float(np.max(np.abs(d + 1j * Hm / config.hbar))), 1e-7

        def order(Hm=Hm, estimates=estimates):
            target = -1j * Hm / config.hbar
            _, coarse, halved = estimates()
            e1 = np.max(np.abs(coarse.d_t.matrix - target))
            e2 = np.max(np.abs(halved.d_t.matrix - target))
            return float(e1 / e2), 3.5

        checks.append(Check(f"displacement.anti_hermitian.dim{dim}", "d_t + d_t^+ = 0",
                            lambda e=estimates: (check_anti_hermitian(e()[0]).deviation, 1e-8)))
        checks.append(Check(f"displacement.generator.dim{dim}", "d_t = -i H / hbar", generator))
        checks.append(Check(f"displacement.halving_ratio.dim{dim}",
                            "halving the delta sequence shrinks the d_t error by at least the tolerance factor",
                            order, "ge"))
    return checks


def _heisenberg(config: SuiteConfig, rng) -> List[Check]:
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0 + 0j, -1.0])

    def spin():
        rep = abstract(2, config.hbar)
        r = check_heisenberg_rate(Operator(sx, rep), ConstantSchedule(Operator(sz / 2, rep)), 0.0, _geometric(1e-2))
        return r.deviation, 1e-8

    checks = [Check("heisenberg.spin", "transported rate equals d_t S - S d_t (spin-1/2)", spin)]
    for dim in config.dims:
        def oscillator(dim=dim):
            rep = ladder(dim, hbar=config.hbar)
            H = ConstantSchedule(quantize(parse_expr("p1^2/2", SPACE1), rep))
            r = check_heisenberg_rate(rep.Q, H, 0.0, _geometric(2e-3))
            return r.deviation, 1e-8

        checks.append(Check(f"heisenberg.free_particle.dim{dim}",
                            "transported rate equals d_t S - S d_t (S = Q, H = P^2/2)", oscillator))
    return checks


def _reconstruction(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    alpha = 0.7
    for dim in config.dims:
        Hm = _random_hermitian(rng, dim, 3.0)

        def plain(dim=dim, Hm=Hm):
            rep = abstract(dim, config.hbar)
            H = Operator(Hm, rep)
            sched = ConstantSchedule(H)
            r = reconstruct_hamiltonian(lambda d: propagate(sched, 0.0, d), _geometric(1e-2), rep, reference=H)
            return r.deviation, 1e-7

        def gauged(dim=dim, Hm=Hm):
            rep = abstract(dim, config.hbar)
            sched = ConstantSchedule(Operator(Hm, rep))
            family = lambda d: np.exp(1j * alpha * d) * propagate(sched, 0.0, d).T
            shifted = Operator(Hm - config.hbar * alpha * np.eye(dim), rep)
            r = reconstruct_hamiltonian(family, _geometric(1e-2), rep, reference=shifted)
            return r.deviation, 1e-7

        checks.append(Check(f"reconstruction.plain.dim{dim}", "H = i hbar d_t after trace alignment", plain))
        checks.append(Check(f"reconstruction.gauge.dim{dim}", "phase-gauged family recovers H - hbar*alpha", gauged))
    return checks


def _schrodinger(config: SuiteConfig, rng) -> List[Check]:
    checks = []
    q0 = 1.0
    for dim in config.dims:
        @lru_cache(maxsize=None)
        def setup(dim=dim):
            rep = ladder(dim, hbar=config.hbar)
            H = ConstantSchedule(quantize(parse_expr("p1^2/2 + q1^2/2", SPACE1), rep))
            return rep, H, coherent_state(rep, q0)

        def trajectory(h, n, setup=setup):
            rep, H, psi = setup()
            return [(k * h, propagate(H, 0.0, k * h).apply(psi)) for k in range(n)]

        def residual(setup=setup, trajectory=trajectory):
            return schrodinger_residual(trajectory(1e-3, 9), setup()[1]), 1e-6

        def order(setup=setup, trajectory=trajectory):
            H = setup()[1]
            r1 = schrodinger_residual(trajectory(0.04, 7), H)
            r2 = schrodinger_residual(trajectory(0.02, 7), H)
            return math.log2(r1 / r2), 3.5

        def ehrenfest(setup=setup):
            rep, H, psi = setup()
            worst = 0.0
            for t in np.linspace(0.0, 2 * math.pi, 65):
                q = expectation(propagate(H, 0.0, t).apply(psi), rep.Q).real
                worst = max(worst, abs(q - q0 * math.cos(t)))
            return worst, 1e-6

        checks.append(Check(f"schrodinger.residual.dim{dim}", "i hbar dpsi/dt = H psi along exact evolution", residual))
        checks.append(Check(f"schrodinger.order.dim{dim}", "measured time-difference convergence order", order, "ge"))
        checks.append(Check(f"schrodinger.ehrenfest.dim{dim}", "<Q(t)> = q0 cos t for the oscillator", ehrenfest))
    return checks


DRIVEN = "p1^2/(2*m) + k*q1^2/2 + A*q1*cos(w*t)"
DRIVEN_PARAMS = {"m": 1.0, "k": 1.0, "A": 0.5, "w": 1.3}


def _autonomize(config: SuiteConfig, rng) -> List[Check]:
    space = PhaseSpace(1, has_time=True, parameters=tuple(DRIVEN_PARAMS))

    @lru_cache(maxsize=None)
    def driven():
        H = parse_expr(DRIVEN, space)
        system = autonomize(H)
        s0 = ClassicalState([1.0, 0.0], 0.0)
        orig = integrate_classical(H, s0, 10.0, 1e-3, DRIVEN_PARAMS)
        ext = integrate_classical(system, extend_state(system, s0, DRIVEN_PARAMS), 10.0, 1e-3, DRIVEN_PARAMS)
        return H, system, orig, ext

    def identity_p0():
        _, system, _, _ = driven()
        return numeric_gap(differentiate(system.H_tilde, "p0"), system.extended_space.const(1), trials=200), 1e-9

    def identity_q0():
        H, system, _, _ = driven()
        dH_dt = system.to_extended(differentiate(H, "t"))
        return numeric_gap(differentiate(system.H_tilde, "q0"), dH_dt, trials=200), 1e-9

    def projection():
        _, _, orig, ext = driven()
        return float(np.max(np.abs(project(ext).array - orig.array))), 1e-8

    def energy():
        _, system, _, ext = driven()
        return energy_defect(system, ext, DRIVEN_PARAMS), 1e-7

    def flow(zeta):
        def run():
            _, system, _, ext = driven()
            z = system.H_tilde if zeta == "H~" else parse_expr(zeta, system.extended_space)
            return observable_flow_check(z, system, ext, params=DRIVEN_PARAMS).deviation, 1e-6
        return run

    return [
        Check("autonomize.identity.dHt_dp0", "dH~/dp0 == 1 at 200 points", identity_p0),
        Check("autonomize.identity.dHt_dq0", "dH~/dq0 == dH/dt at 200 points", identity_q0),
        Check("autonomize.projection", "extended and original trajectories agree on (q, p)", projection),
        Check("autonomize.energy", "E(t) = H(q(t), p(t), t) along the extended flow", energy),
        Check("autonomize.flow.q0", "d q0/dt = {q0, H~} = 1", flow("q0")),
        Check("autonomize.flow.p1", "d p1/dt = {p1, H~}", flow("p1")),
        Check("autonomize.flow.H_tilde", "H~ conserved along the extended flow", flow("H~")),
    ]


def _booster(config: SuiteConfig, rng) -> List[Check]:
    systems = []
    for _ in range(100):
        n = int(rng.integers(1, 8))
        systems.append(ParticleSystem.from_arrays(rng.uniform(0.1, 5.0, n), rng.normal(size=(n, 3)) * 3,
                                                  rng.normal(size=(n, 3)) * 2, time=rng.uniform(-5, 5)))
    steps = rng.uniform(-2, 2, size=10)

    def identity():
        worst = 0.0
        for s in systems:
            M, R, P = aggregate(s)
            worst = max(worst, float(np.max(np.abs(booster_sum(s) - (P * s.time - M * R)))))
        return worst, 1e-12

    def conservation():
        worst = 0.0
        for s in systems:
            N0 = booster_sum(s)
            cur = s
            for dt in steps:
                cur = free_evolve(cur, dt)
            worst = max(worst, float(np.linalg.norm(booster_sum(cur) - N0)))
        return worst, 1e-10

    def split():
        worst = 0.0
        for s in systems:
            orbital, internal = angular_momentum_split(s)
            worst = max(worst, float(np.max(np.abs(orbital + internal - total_angular_momentum(s)))))
        return worst, 1e-12

    return [
        Check("booster.identity", "sum(p_k t - m_k r_k) = P t - M R", identity),
        Check("booster.conservation", "N conserved under free flight", conservation),
        Check("booster.angular_split", "R x P + internal = sum r_k x p_k", split),
    ]


_BUILDERS = {
    "lemma1": _lemma1,
    "omega": _omega,
    "unitarity": _unitarity,
    "displacement": _displacement,
    "heisenberg": _heisenberg,
    "reconstruction": _reconstruction,
    "schrodinger": _schrodinger,
    "autonomize": _autonomize,
    "booster": _booster,
}
