import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaxiom.errors import InvalidSpec, MismatchedRep, UnsupportedExpression, UnboundSymbol, ZeroKet
from qaxiom.hilbert import (Grid, Ket, Ladder, Operator, abstract, build_representation,
                            commutator, expectation, grid, ladder, quantize, weyl_ordered)
from qaxiom.symbolic import PhaseSpace, parse_expr

from helpers import random_polynomial

S1 = PhaseSpace(1, has_time=True, parameters=("m", "k", "w"))


def Pq(text):
    return parse_expr(text, S1)


# --- construction -----------------------------------------------------------

def test_grid_example():
    r = build_representation(Grid(4, -1.0, 1.0))
    assert r.kind.spacing == pytest.approx(2 / 3)
    np.testing.assert_allclose(np.diag(r.Q.matrix).real, [-1, -1 / 3, 1 / 3, 1], atol=1e-15)
    assert r.interior_margin == 1 and r.interior() == slice(1, 3)


def test_ladder_example():
    r = build_representation(Ladder(2, 1.0, 1.0), hbar=1.0)
    np.testing.assert_allclose(r.Q.matrix, np.array([[0, 1], [1, 0]]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(r.P.matrix, 1j * np.array([[0, -1], [1, 0]]) / math.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("make", [
    lambda: Ladder(1), lambda: Grid(2, 0, 1), lambda: Grid(5, 1, 1), lambda: Grid(5, 0, 1, "wrap"),
    lambda: Grid(5, 0, 1, fd_order=6), lambda: Ladder(4, mass=0), lambda: Ladder(4, omega=-1),
    lambda: build_representation(Ladder(4), hbar=0), lambda: build_representation(Grid(4, 0, 1), interior_margin=2),
])
def test_invalid_specs(make):
    with pytest.raises(InvalidSpec):
        make()


@pytest.mark.parametrize("rep", [
    grid(40, -3, 3), grid(40, -3, 3, "periodic"), grid(40, -3, 3, fd_order=4),
    grid(40, -3, 3, "periodic", 4), ladder(30), ladder(30, mass=2.0, omega=0.5, hbar=0.3),
])
def test_canonical_operators_hermitian(rep):
    assert rep.Q.hermiticity_defect() <= 1e-12
    assert rep.P.hermiticity_defect() <= 1e-12


def test_periodic_derivative_wraps():
    r = grid(6, 0, 5, "periodic")
    d = r.derivative_matrix
    assert d[0, -1] == pytest.approx(-0.5) and d[-1, 0] == pytest.approx(0.5)
    np.testing.assert_allclose(d, -d.T)


# --- commutators ------------------------------------------------------------

def test_self_commutator_zero():
    r = ladder(10)
    assert np.all(commutator(r.Q, r.Q).matrix == 0)


@pytest.mark.parametrize("n", [2, 5, 16, 64])
@pytest.mark.parametrize("hbar", [1.0, 0.25])
def test_truncated_ladder_commutator(n, hbar):
    r = ladder(n, mass=1.3, omega=0.7, hbar=hbar)
    c = commutator(r.Q, r.P).matrix
    expected = 1j * hbar * np.eye(n)
    expected[-1, -1] = 1j * hbar * (1 - n)
    np.testing.assert_allclose(c, expected, atol=1e-12)
    s = r.interior()
    assert np.max(np.abs(c[s, s] - 1j * hbar * np.eye(n - 1))) <= 1e-12


def _gaussian(rep, center=0.0, width=1.0):
    x = rep.points
    return Ket(np.exp(-((x - center) / width) ** 2 / 2), rep)


def test_grid_commutator_weak_limit_order():
    devs = []
    for n in (101, 201, 401, 801):
        r = grid(n, -10, 10)
        devs.append(abs(expectation(_gaussian(r), commutator(r.Q, r.P)) - 1j))
    orders = [math.log2(devs[i] / devs[i + 1]) for i in range(len(devs) - 1)]
    assert min(orders) >= 1.8


def test_derivative_position_commutator_rows_average_identity():
    # [D, Q] psi -> psi with error of order fd_order on smooth functions
    for order in (2, 4):
        errs = []
        for n in (81, 161, 321):
            r = grid(n, -8, 8, fd_order=order)
            psi = np.exp(-r.points ** 2 / 2) * np.cos(r.points)
            c = r.derivative_matrix @ (r.points * psi) - r.points * (r.derivative_matrix @ psi)
            s = r.interior()
            errs.append(np.max(np.abs(c[s] - psi[s])))
        measured = math.log2(errs[-2] / errs[-1])
        assert measured >= order - 0.2
        # each interior row of [D, Q] is a convex average of identity rows
        r = grid(11, 0, 1, fd_order=order)
        cq = r.derivative_matrix @ np.diag(r.points) - np.diag(r.points) @ r.derivative_matrix
        s = r.interior()
        np.testing.assert_allclose(cq[s].sum(axis=1), 1.0)


def test_commutator_mismatched():
    with pytest.raises(MismatchedRep):
        commutator(ladder(4).Q, ladder(5).Q)
    with pytest.raises(MismatchedRep):
        commutator(ladder(4).Q, ladder(4, hbar=2).Q)


# --- expectation ------------------------------------------------------------

def test_expectation_examples():
    r = ladder(12)
    ground = r.basis_ket(0)
    assert abs(expectation(ground, r.Q)) < 1e-15
    a = r.annihilation
    assert abs(expectation(ground, Operator(a.conj().T @ a, r))) < 1e-15
    rng = np.random.default_rng(0)
    psi = Ket(rng.normal(size=12) + 1j * rng.normal(size=12), r)
    assert expectation(psi, r.identity) == pytest.approx(1.0)
    with pytest.raises(ZeroKet):
        expectation(Ket(np.zeros(12), r), r.Q)


# --- quantize ---------------------------------------------------------------

def test_quantize_identity_mapping():
    r = ladder(10)
    np.testing.assert_array_equal(quantize(Pq("q1"), r).matrix, r.Q.matrix)
    np.testing.assert_array_equal(quantize(Pq("p1"), r).matrix, r.P.matrix)


def test_quantize_qp_symmetric():
    r = grid(20, -2, 2)
    Q, P = r.Q.matrix, r.P.matrix
    np.testing.assert_allclose(quantize(Pq("q1*p1"), r).matrix, (Q @ P + P @ Q) / 2, atol=1e-14)
    np.testing.assert_allclose(quantize(Pq("p1*q1"), r).matrix, (Q @ P + P @ Q) / 2, atol=1e-14)


def test_quantize_function_of_q():
    r = grid(15, -2, 2)
    np.testing.assert_allclose(quantize(Pq("sin(q1)"), r).matrix, np.diag(np.sin(r.points)), atol=1e-15)
    F = np.diag(np.cos(r.points) * r.points)
    P = r.P.matrix
    np.testing.assert_allclose(quantize(Pq("q1*cos(q1)*p1"), r).matrix, (F @ P + P @ F) / 2, atol=1e-14)
    with pytest.raises(UnsupportedExpression):
        quantize(Pq("sin(q1)"), ladder(6))
    with pytest.raises(UnsupportedExpression):
        quantize(Pq("sin(q1)*p1^2"), r)


@pytest.mark.parametrize("text", ["sin(p1)", "exp(q1*p1)", "cos(p1)*q1"])
def test_quantize_unsupported(text):
    with pytest.raises(UnsupportedExpression):
        quantize(Pq(text), grid(9, -1, 1))


def test_quantize_multi_pair_rejected():
    s = PhaseSpace(2)
    with pytest.raises(UnsupportedExpression):
        quantize(parse_expr("q1*q2", s), ladder(6))
    # only the first pair present is fine
    quantize(parse_expr("q1*p1", s), ladder(6))


def test_quantize_parameters():
    r = ladder(8)
    op = quantize(Pq("p1^2/(2*m) + k*q1^2/2 + cos(w*t)*q1"), r, {"m": 2.0, "k": 3.0, "w": 1.0, "t": 0.0})
    Q, P = r.Q.matrix, r.P.matrix
    np.testing.assert_allclose(op.matrix, P @ P / 4 + 1.5 * Q @ Q + Q, atol=1e-14)
    with pytest.raises(UnboundSymbol):
        quantize(Pq("m*q1"), r)


def _mccoy(Q, P, a, b):
    out = np.zeros_like(Q)
    mp = np.linalg.matrix_power
    for k in range(a + 1):
        out += math.comb(a, k) * mp(Q, k) @ mp(P, b) @ mp(Q, a - k)
    return out / 2 ** a


@pytest.mark.parametrize("a,b", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (2, 3), (3, 3)])
def test_weyl_matches_mccoy_on_interior(a, b):
    # McCoy's closed form uses [Q, P] = i hbar, so it only agrees away from the truncation
    r = ladder(40)
    W = weyl_ordered(r.Q.matrix, r.P.matrix, a, b)
    M = _mccoy(r.Q.matrix, r.P.matrix, a, b)
    s = slice(0, 40 - (a + b))
    np.testing.assert_allclose(W[s, s], M[s, s], atol=1e-9)


def test_weyl_brute_force_permutations():
    rng = np.random.default_rng(1)
    Q = rng.normal(size=(5, 5))
    P = rng.normal(size=(5, 5))
    for a, b in [(2, 1), (1, 3), (2, 2)]:
        words = {w for w in itertools.permutations("Q" * a + "P" * b)}
        ref = sum(np.linalg.multi_dot([Q if c == "Q" else P for c in w] + [np.eye(5)]) for w in words) / len(words)
        np.testing.assert_allclose(weyl_ordered(Q, P, a, b), ref, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.fractions(-3, 3, max_denominator=5), st.fractions(-3, 3, max_denominator=5))
def test_quantize_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    s = PhaseSpace(1)
    u = random_polynomial(rng, s, 3)
    v = random_polynomial(rng, s, 3)
    for r in (ladder(12), grid(12, -1, 1)):
        lhs = quantize(a * u + b * v, r).matrix
        rhs = float(a) * quantize(u, r).matrix + float(b) * quantize(v, r).matrix
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_quantize_real_polynomial_hermitian():
    rng = np.random.default_rng(2)
    s = PhaseSpace(1)
    for _ in range(10):
        e = random_polynomial(rng, s, 4)
        assert quantize(e, ladder(16)).hermiticity_defect() <= 1e-10


# --- operator plumbing ------------------------------------------------------

def test_operator_immutable_and_json():
    r = ladder(2)
    op = r.Q
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 1
    js = r.P.to_json()
    assert js[0][1] == [0.0, pytest.approx(-1 / math.sqrt(2))]
    assert len(js) == 2 and len(js[0]) == 2


def test_operator_shape_checked():
    with pytest.raises(MismatchedRep):
        Operator(np.eye(3), ladder(4))
    with pytest.raises(MismatchedRep):
        Ket(np.ones(3), ladder(4))


def test_abstract_rep_has_no_pair():
    r = abstract(2)
    with pytest.raises(UnsupportedExpression):
        r.Q
    with pytest.raises(UnsupportedExpression):
        quantize(Pq("q1"), r)
