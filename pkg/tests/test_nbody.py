import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qaxiom.nbody import (Particle, ParticleSystem, aggregate, angular_momentum_split, booster, booster_sum,
                          dump_system, free_evolve, galilean_boost, load_system, read_system,
                          total_angular_momentum)


def random_system(rng, n=None, time=None):
    n = n or int(rng.integers(1, 8))
    return ParticleSystem.from_arrays(rng.uniform(0.1, 5.0, n), rng.normal(size=(n, 3)) * 3,
                                      rng.normal(size=(n, 3)) * 2,
                                      time=rng.uniform(-5, 5) if time is None else time)


def single(m, r, p, t=0.0):
    return ParticleSystem((Particle(m, r, p),), t)


def test_particle_validation():
    with pytest.raises(ValueError):
        Particle(0.0, [0, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        Particle(1.0, [0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        Particle(1.0, [0, 0, np.nan], [0, 0, 0])
    with pytest.raises(ValueError):
        ParticleSystem(())


def test_aggregate_examples():
    M, R, P = aggregate(single(2.0, [1, 2, 3], [4, 5, 6]))
    assert M == 2.0 and np.array_equal(R, [1, 2, 3]) and np.array_equal(P, [4, 5, 6])

    two = ParticleSystem((Particle(1, [1, 0, 0], [0, 0, 0]), Particle(1, [-1, 0, 0], [0, 0, 0])))
    assert np.array_equal(aggregate(two)[1], [0, 0, 0])

    weighted = ParticleSystem((Particle(1, [0, 0, 0], [0, 0, 0]), Particle(3, [4, 0, 0], [0, 0, 0])))
    assert aggregate(weighted)[1][0] == 3.0


def test_booster_at_time_zero():
    rng = np.random.default_rng(0)
    s = random_system(rng, time=0.0)
    M, R, _ = aggregate(s)
    assert np.allclose(booster(s), -M * R, atol=1e-12)


def test_booster_single_free_particle():
    r0, v = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.1, -0.7])
    s = single(1.0, r0, v)
    for dt in [0.0, 0.5, 3.0, 10.0]:
        assert np.allclose(booster(free_evolve(s, dt)), -r0, atol=1e-12)


def test_booster_sum_identity_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = random_system(rng)
        M, R, P = aggregate(s)
        assert np.max(np.abs(booster_sum(s) - (P * s.time - M * R))) <= 1e-12 * (1 + np.max(np.abs(booster_sum(s))))


def test_angular_momentum_single_particle():
    orbital, internal = angular_momentum_split(single(1.5, [1, 2, 0], [0, 1, 3]))
    assert np.allclose(internal, 0.0, atol=1e-14)
    assert np.allclose(orbital, np.cross([1, 2, 0], [0, 1, 3]))


def test_angular_momentum_counter_rotating_pair():
    s = ParticleSystem((Particle(1, [1, 0, 0], [0, 1, 0]), Particle(1, [-1, 0, 0], [0, -1, 0])))
    orbital, internal = angular_momentum_split(s)
    assert np.allclose(orbital, 0.0)
    assert np.allclose(internal, total_angular_momentum(s))
    assert np.allclose(internal, [0, 0, 2])


def test_angular_momentum_identity_random():
    rng = np.random.default_rng(2)
    for _ in range(100):
        s = random_system(rng)
        orbital, internal = angular_momentum_split(s)
        assert np.max(np.abs(orbital + internal - total_angular_momentum(s))) <= 1e-12 * 50


def test_free_evolve_examples():
    s = single(2.0, [1, 1, 1], [2, 0, 0], t=1.0)
    moved = free_evolve(s, 3.0)
    assert np.array_equal(moved.particles[0].position, [4, 1, 1])
    assert moved.time == 4.0
    still = free_evolve(s, 0.0)
    assert np.array_equal(still.positions, s.positions) and still.time == s.time
    rest = single(1.0, [1, 2, 3], [0, 0, 0])
    assert np.array_equal(free_evolve(rest, 7.0).positions, rest.positions)
    with pytest.raises(ValueError):
        free_evolve(s, float("inf"))


def test_conservation_under_free_evolution():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = random_system(rng)
        N0, P0 = booster(s), aggregate(s)[2]
        L0 = angular_momentum_split(s)[1]
        cur = s
        for dt in rng.uniform(-2, 2, size=10):
            cur = free_evolve(cur, dt)
        assert np.linalg.norm(booster(cur) - N0) <= 1e-10
        assert np.max(np.abs(aggregate(cur)[2] - P0)) <= 1e-12
        assert np.max(np.abs(angular_momentum_split(cur)[1] - L0)) <= 1e-12 * (1 + np.max(np.abs(L0))) * 10


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_galilean_boost_leaves_booster_unchanged(seed, u):
    s = random_system(np.random.default_rng(seed))
    b = galilean_boost(s, u)
    assert np.allclose(booster(b), booster(s), atol=1e-10)
    assert np.allclose(aggregate(b)[2], aggregate(s)[2] + aggregate(s)[0] * np.array(u))


def test_csv_round_trip(tmp_path):
    s = random_system(np.random.default_rng(4), n=4)
    path = tmp_path / "system.csv"
    path.write_text(dump_system(s))
    back = load_system(path)
    assert back.time == s.time
    assert np.array_equal(back.masses, s.masses)
    assert np.array_equal(back.positions, s.positions)
    assert np.array_equal(back.momenta, s.momenta)


def test_csv_parsing():
    text = "time,2.5\nmass,rx,ry,rz,px,py,pz\n1,0,0,0,1,0,0\n3,4,0,0,0,0,0\n"
    s = read_system(text.splitlines())
    assert s.time == 2.5 and len(s) == 2
    assert np.allclose(booster(s), [2.5 - 12, 0, 0])


@pytest.mark.parametrize("text", [
    "mass,rx,ry,rz,px,py,pz\n1,0,0,0,0,0,0\n",
    "time,0\nmass,x,y,z,px,py,pz\n1,0,0,0,0,0,0\n",
    "time,0\nmass,rx,ry,rz,px,py,pz\n1,0,0,0,0,0\n",
    "time,0\nmass,rx,ry,rz,px,py,pz\n-1,0,0,0,0,0,0\n",
])
def test_csv_rejects(text):
    with pytest.raises(ValueError):
        read_system(text.splitlines())
