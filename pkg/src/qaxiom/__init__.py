"""Numerical checks of canonical quantization identities.

Subpackages and modules:

* :mod:`qaxiom.symbolic` expressions over phase space, parsing, derivatives
  and Poisson brackets.
* :mod:`qaxiom.hilbert` finite representations of ``(Q, P)`` and Weyl
  quantization.
* :mod:`qaxiom.correspondence` commutator versus bracket comparisons.
* :mod:`qaxiom.evolution` propagators, the time-displacement operator and
  Hamiltonian reconstruction.
* :mod:`qaxiom.autonomize` extended phase space for time-dependent
  Hamiltonians and a classical RK4 integrator.
* :mod:`qaxiom.nbody` aggregate quantities and the booster of a free
  particle system.
* :mod:`qaxiom.report` verification suites; :mod:`qaxiom.cli` the command line.
"""
__version__ = "0.1.0"

from .symbolic import Expr, PhaseSpace, parse_expr  # noqa: E402

__all__ = ["Expr", "PhaseSpace", "parse_expr", "__version__"]
