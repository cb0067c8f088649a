import math

import numpy as np
import pytest

from qaxiom.autonomize import (ClassicalState, autonomize, energy_defect, extend_state, hamilton_rhs,
                               integrate_classical, observable_flow_check, project)
from qaxiom.errors import EContamination, MismatchedSpace, NonfiniteState, UnboundSymbol
from qaxiom.symbolic import PhaseSpace, differentiate, equal_numeric, parse_expr

DRIVEN = "p1^2/(2*m) + k*q1^2/2 + A*q1*cos(w*t)"
DRIVEN_PARAMS = dict(m=1.0, k=1.0, A=0.5, w=1.3)
SPACE_T = PhaseSpace(1, has_time=True, parameters=("m", "k", "A", "w"))


@pytest.fixture(scope="module")
def driven():
    H = parse_expr(DRIVEN, SPACE_T)
    system = autonomize(H)
    s0 = ClassicalState([1.0, 0.0], 0.0)
    orig = integrate_classical(H, s0, 10.0, 1e-3, DRIVEN_PARAMS)
    ext = integrate_classical(system, extend_state(system, s0, DRIVEN_PARAMS), 10.0, 1e-3, DRIVEN_PARAMS)
    return H, system, orig, ext


# --- embedding --------------------------------------------------------------

def test_embedding_driven_oscillator():
    system = autonomize(parse_expr("p1^2/(2*m) + A*q1*cos(w*t)", SPACE_T))
    ext = system.extended_space
    expected = parse_expr("p1^2/(2*m) + A*q1*cos(w*q0) + p0", ext)
    assert equal_numeric(system.H_tilde, expected)
    assert ext.dof == 2 and ext.coordinates == ("q0", "q1")
    assert str(system.H_tilde) == "p1^2/(2*m) + A*q1*cos(w*q0) + p0"


def test_time_independent_is_cyclic():
    space = PhaseSpace(1, has_time=True, parameters=("m",))
    system = autonomize(parse_expr("p1^2/(2*m)", space))
    ext = system.extended_space
    assert equal_numeric(differentiate(system.H_tilde, "q0"), ext.const(0))
    assert equal_numeric(differentiate(system.H_tilde, "p0"), ext.const(1))


def test_autonomous_space_without_time_accepted():
    system = autonomize(parse_expr("p1^2/2 + q1^2/2", PhaseSpace(1)))
    assert equal_numeric(differentiate(system.H_tilde, "q0"), system.extended_space.const(0))


@pytest.mark.parametrize("text", ["p1^2/2 + E", "q1*E*t", "E^2"])
def test_energy_contamination(text):
    space = PhaseSpace(1, has_time=True, has_energy=True)
    with pytest.raises(EContamination):
        autonomize(parse_expr(text, space))


def test_embedding_identities_multi_dof():
    space = PhaseSpace(2, has_time=True)
    H = parse_expr("p1^2/2 + p2^2/2 + q1*q2*sin(t) + exp(-t)*q2^2", space)
    system = autonomize(H)
    ext = system.extended_space
    dH_dt = system.to_extended(differentiate(H, "t"))
    assert equal_numeric(differentiate(system.H_tilde, "q0"), dH_dt, trials=200)
    assert equal_numeric(differentiate(system.H_tilde, "p0"), ext.const(1), trials=200)


def test_to_extended_maps_energy_to_minus_p0():
    space = PhaseSpace(1, has_time=True, has_energy=True)
    system = autonomize(parse_expr("p1^2/2 + t*q1", space))
    mapped = system.to_extended(parse_expr("E + t", space))
    assert equal_numeric(mapped, parse_expr("q0 - p0", system.extended_space))
    with pytest.raises(MismatchedSpace):
        system.to_extended(parse_expr("q1", PhaseSpace(1)))


# --- Hamilton's equations ---------------------------------------------------

def test_sho_rhs():
    H = parse_expr("p1^2/(2*m) + k*q1^2/2", PhaseSpace(1, parameters=("m", "k")))
    rhs = hamilton_rhs(H, ClassicalState([1.0, 0.0]), dict(m=1, k=1))
    assert np.allclose(rhs, [0.0, -1.0])


def test_extended_rhs_time_and_energy_components():
    space = PhaseSpace(1, has_time=True, parameters=("A", "w"))
    H = parse_expr("q1*A*cos(w*t)", space)
    system = autonomize(H)
    A, w = 0.7, 2.0
    rng = np.random.default_rng(3)
    for _ in range(10):
        q, p, t, E = rng.uniform(-2, 2, size=4)
        rhs = hamilton_rhs(system, ClassicalState([q, p, t, E]), dict(A=A, w=w))
        assert rhs[2] == 1.0
        # E-component equals dH/dt, i.e. p0' = -dH/dt = q A w sin(w t)
        assert math.isclose(-rhs[3], q * A * w * math.sin(w * t), abs_tol=1e-14)
        assert math.isclose(rhs[1], -A * math.cos(w * t), abs_tol=1e-14)


def test_rhs_state_length_checked():
    H = parse_expr("p1^2/2", PhaseSpace(1))
    with pytest.raises(ValueError):
        hamilton_rhs(H, ClassicalState([1.0, 0.0, 0.0]))


def test_unbound_parameter():
    H = parse_expr("p1^2/(2*m)", PhaseSpace(1, parameters=("m",)))
    with pytest.raises(UnboundSymbol):
        hamilton_rhs(H, ClassicalState([0.0, 1.0]))


# --- integration ------------------------------------------------------------

def test_free_particle_exact():
    H = parse_expr("p1^2/(2*m)", PhaseSpace(1, parameters=("m",)))
    traj = integrate_classical(H, ClassicalState([0.3, 1.7]), 5.0, 0.01, dict(m=2.0))
    t = traj.times
    assert np.max(np.abs(traj.array[:, 0] - (0.3 + 1.7 / 2.0 * t))) <= 1e-12
    assert np.all(traj.array[:, 1] == 1.7)


def sho_endpoint_error(h):
    H = parse_expr("p1^2/2 + q1^2/2", PhaseSpace(1))
    n = int(round(2 * math.pi / h))
    traj = integrate_classical(H, ClassicalState([1.0, 0.0]), n * h, h)
    q, p = traj.array[-1]
    return abs(q - math.cos(n * h)) + abs(p + math.sin(n * h)), traj


def test_sho_one_period():
    H = parse_expr("p1^2/2 + q1^2/2", PhaseSpace(1))
    traj = integrate_classical(H, ClassicalState([1.0, 0.0]), 2 * math.pi, 2 * math.pi / 6284)
    q, p = traj.array.T
    assert abs(q[-1] - 1.0) <= 1e-9
    energy = 0.5 * (p ** 2 + q ** 2)
    assert np.max(np.abs(energy - 0.5)) <= 1e-9


def test_rk4_order():
    e1, _ = sho_endpoint_error(0.04)
    e2, _ = sho_endpoint_error(0.02)
    assert e1 / e2 >= 14
    assert math.log2(e1 / e2) >= 3.8


def test_step_must_divide_interval():
    H = parse_expr("p1^2/2", PhaseSpace(1))
    with pytest.raises(ValueError):
        integrate_classical(H, ClassicalState([0.0, 1.0]), 1.0, 0.3)
    with pytest.raises(ValueError):
        integrate_classical(H, ClassicalState([0.0, 1.0]), 1.0, -0.1)


def test_nonfinite_state():
    H = parse_expr("p1^2/2 - q1^4", PhaseSpace(1))
    with pytest.raises(NonfiniteState):
        integrate_classical(H, ClassicalState([10.0, 10.0]), 10.0, 0.1)


def test_deterministic():
    H = parse_expr("p1^2/2 + q1^4/4", PhaseSpace(1))
    a = integrate_classical(H, ClassicalState([1.0, 0.2]), 1.0, 0.01)
    b = integrate_classical(H, ClassicalState([1.0, 0.2]), 1.0, 0.01)
    assert np.array_equal(a.array, b.array)


# --- driven oscillator cross-checks -----------------------------------------

def test_projection_equivalence(driven):
    _, _, orig, ext = driven
    assert np.max(np.abs(project(ext).array - orig.array)) <= 1e-8
    assert np.allclose(ext.array[:, 2], ext.times, atol=1e-10)


def test_energy_bookkeeping(driven):
    _, system, _, ext = driven
    assert energy_defect(system, ext, DRIVEN_PARAMS) <= 1e-7


@pytest.mark.parametrize("zeta", ["q0", "p1", "q1*p1 + p0"])
def test_observable_flow(driven, zeta):
    _, system, _, ext = driven
    report = observable_flow_check(parse_expr(zeta, system.extended_space), system, ext, params=DRIVEN_PARAMS)
    assert report.passed, report


def test_h_tilde_conserved(driven):
    _, system, _, ext = driven
    assert observable_flow_check(system.H_tilde, system, ext, params=DRIVEN_PARAMS).passed


def test_flow_check_needs_extended(driven):
    _, system, orig, ext = driven
    with pytest.raises(ValueError):
        observable_flow_check(parse_expr("q0", system.extended_space), system, orig, params=DRIVEN_PARAMS)
    with pytest.raises(MismatchedSpace):
        observable_flow_check(parse_expr("q1", SPACE_T), system, ext, params=DRIVEN_PARAMS)


# --- CSV --------------------------------------------------------------------

def test_csv_export(tmp_path, driven):
    _, _, orig, ext = driven
    text = orig.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,q1,p1"
    assert len(lines) == len(orig.states) + 1
    row = [float(x) for x in lines[5].split(",")]
    assert row[1:] == list(orig.states[4].values)

    path = tmp_path / "ext.csv"
    ext.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,q1,p1,E"
    last = [float(x) for x in lines[-1].split(",")]
    assert last[0] == ext.states[-1].values[2]
    assert last[3] == ext.states[-1].values[3]
