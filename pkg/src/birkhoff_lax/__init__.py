"""Lax pairs and first integrals for exponential-interaction lattices.

Subpackage map:

- ``spectrum``: exponent-vector spectra, diagram machinery, the unscaled
  Flaschka transform and its Casimir-type integrals.
- ``dn_toda``: the open D-type Toda lattice, its symmetric Lax pair
  (L, B), the quadratic pair (L^2, B), and the trace/determinant
  invariants.
- ``kt_system``: the forked lattice with the doubled tail, its complex
  Hermitian Lax pair (A, C), trace integrals and exact gradients.
- ``poisson``: structure-matrix Poisson brackets, involution and Casimir
  diagnostics.
- ``dynamics``: adaptive RK5(4) and leapfrog integrators, drift and
  eigenvalue-drift reports.
- ``cli``: the ``birkhoff-lax`` command (classify / simulate / verify).
"""

from . import backend, dn_toda, dynamics, kt_system, poisson, spectrum
from .backend import backend_name

__all__ = [
    "backend",
    "backend_name",
    "dn_toda",
    "dynamics",
    "kt_system",
    "poisson",
    "spectrum",
]

__version__ = "0.1.0"
