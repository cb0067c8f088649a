"""Aggregate quantities of a system of free classical particles.

Total mass ``M``, centre of mass ``R``, total momentum ``P``, the booster
``N = sum(p_k t - m_k r_k) = P t - M R`` and the split of angular momentum
into an orbital part ``R x P`` and an internal part about the centre of mass.
Spin is not modelled.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Tuple

import numpy as np

IDENTITY_TOL = 1e-12


def _vec3(v, name: str) -> np.ndarray:
    a = np.array(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Particle:
    mass: float
    position: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"particle mass must be positive, got {self.mass!r}")
        object.__setattr__(self, "mass", float(self.mass))
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "momentum", _vec3(self.momentum, "momentum"))


@dataclass(frozen=True, eq=False)
class ParticleSystem:
    particles: Tuple[Particle, ...]
    time: float = 0.0

    def __post_init__(self):
        parts = tuple(self.particles)
        if not parts:
            raise ValueError("a particle system needs at least one particle")
        object.__setattr__(self, "particles", parts)
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_arrays(cls, masses, positions, momenta, time: float = 0.0) -> "ParticleSystem":
        return cls(tuple(Particle(m, r, p) for m, r, p in zip(masses, positions, momenta, strict=True)), time)

    @property
    def masses(self) -> np.ndarray:
        return np.array([k.mass for k in self.particles])

    @property
    def positions(self) -> np.ndarray:
        return np.array([k.position for k in self.particles])

    @property
    def momenta(self) -> np.ndarray:
        return np.array([k.momentum for k in self.particles])

    def __len__(self):
        return len(self.particles)


def aggregate(s: ParticleSystem) -> Tuple[float, np.ndarray, np.ndarray]:
    """Total mass, centre of mass and total momentum ``(M, R, P)``."""
    m = s.masses
    M = float(m.sum())
    R = (m[:, None] * s.positions).sum(axis=0) / M
    P = s.momenta.sum(axis=0)
    return M, R, P


def booster_sum(s: ParticleSystem) -> np.ndarray:
    """``N`` as the per-particle sum of ``p_k t - m_k r_k``."""
    t = s.time
    return sum((k.momentum * t - k.mass * k.position for k in s.particles), start=np.zeros(3))


def booster(s: ParticleSystem) -> np.ndarray:
    """The booster ``N = P t - M R``.

    The aggregate form is cross-checked against the per-particle sum; a
    mismatch beyond rounding raises ``ArithmeticError``.
    """
    M, R, P = aggregate(s)
    N = P * s.time - M * R
    direct = booster_sum(s)
    scale = 1.0 + float(np.max(np.abs(direct)))
    if np.max(np.abs(N - direct)) > IDENTITY_TOL * scale:
        raise ArithmeticError("booster aggregate and per-particle sum disagree")
    return N


def total_angular_momentum(s: ParticleSystem) -> np.ndarray:
    return np.cross(s.positions, s.momenta).sum(axis=0)


def angular_momentum_split(s: ParticleSystem) -> Tuple[np.ndarray, np.ndarray]:
    """``(R x P, sum (r_k - R) x (p_k - (m_k / M) P))``.

    The two parts add up to ``sum r_k x p_k``; this is checked on return.
    """
    M, R, P = aggregate(s)
    orbital = np.cross(R, P)
    rel_r = s.positions - R
    rel_p = s.momenta - (s.masses / M)[:, None] * P
    internal = np.cross(rel_r, rel_p).sum(axis=0)
    total = total_angular_momentum(s)
    scale = 1.0 + float(np.max(np.abs(s.positions))) * float(np.max(np.abs(s.momenta))) * len(s)
    if np.max(np.abs(orbital + internal - total)) > IDENTITY_TOL * scale:
        raise ArithmeticError("orbital + internal angular momentum does not match the total")
    return orbital, internal


def free_evolve(s: ParticleSystem, dt: float) -> ParticleSystem:
    """Exact free flight over ``dt``: ``r_k += p_k / m_k * dt``."""
    if not math.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt!r}")
    moved = tuple(replace(k, position=k.position + k.momentum / k.mass * dt) for k in s.particles)
    return ParticleSystem(moved, s.time + dt)


def galilean_boost(s: ParticleSystem, u) -> ParticleSystem:
    """Apply ``p_k -> p_k + m_k u`` and ``r_k -> r_k + u t``."""
    u = _vec3(u, "boost velocity")
    moved = tuple(Particle(k.mass, k.position + u * s.time, k.momentum + k.mass * u) for k in s.particles)
    return ParticleSystem(moved, s.time)


# --- CSV --------------------------------------------------------------------

HEADER = ["mass", "rx", "ry", "rz", "px", "py", "pz"]


def read_system(lines: Iterable[str]) -> ParticleSystem:
    """Parse ``time,<t>`` then the ``mass,rx,ry,rz,px,py,pz`` header and rows."""
    rows = [r for r in csv.reader(lines) if r and any(c.strip() for c in r)]
    if len(rows) < 3:
        raise ValueError("expected a time line, a header line and at least one particle")
    first = [c.strip() for c in rows[0]]
    if len(first) != 2 or first[0] != "time":
        raise ValueError(f"first line must be 'time,<value>', got {','.join(rows[0])!r}")
    header = [c.strip() for c in rows[1]]
    if header != HEADER:
        raise ValueError(f"header must be {','.join(HEADER)}")
    particles: List[Particle] = []
    for n, row in enumerate(rows[2:], start=3):
        if len(row) != 7:
            raise ValueError(f"line {n}: expected 7 fields, got {len(row)}")
        v = [float(c) for c in row]
        particles.append(Particle(v[0], v[1:4], v[4:7]))
    return ParticleSystem(tuple(particles), float(first[1]))


def load_system(path) -> ParticleSystem:
    with open(path, newline="") as fh:
        return read_system(fh)


def dump_system(s: ParticleSystem) -> str:
    out = [f"time,{s.time!r}", ",".join(HEADER)]
    for k in s.particles:
        out.append(",".join(repr(float(x)) for x in (k.mass, *k.position, *k.momentum)))
    return "\n".join(out) + "\n"
