"""Kernel backend selection.

The hot loop of the package is adaptive Runge-Kutta stepping of the two
lattice vector fields; a Cython extension implements it in C.  When the
extension is absent (no compiler at install time), everything falls back
to the pure-python loop in :mod:`birkhoff_lax.dynamics` with identical
stepping logic.  ``benchmarks/benchmark_backends.py`` compares the two.
"""

from __future__ import annotations

import numpy as np

try:
    from . import _fastkern
except ImportError:  # extension not built; pure-python fallback
    _fastkern = None

HAVE_COMPILED = _fastkern is not None

# Vector fields with a compiled implementation, keyed by kernel_name.
KERNELS = {"kt": 0, "dn": 1}


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "pure-python"


def rhs(kernel: str, state: np.ndarray) -> np.ndarray:
    """Compiled evaluation of one tagged vector field (parity testing)."""
    if not HAVE_COMPILED:
        raise RuntimeError("compiled backend is not available")
    return _fastkern.rhs(KERNELS[kernel], np.asarray(state, dtype=float))


def rk45_lattice(kernel, x0, t_end, h0, rtol, atol, max_steps, stride):
    """Run the compiled embedded RK5(4) loop for a tagged field.

    Returns (times, states, accepted, rejected, status) where status is
    an empty string on success or a failure description.
    """
    if not HAVE_COMPILED:
        raise RuntimeError("compiled backend is not available")
    times, states, accepted, rejected, code = _fastkern.rk45_lattice(
        KERNELS[kernel],
        np.asarray(x0, dtype=float),
        float(t_end),
        float(h0),
        float(rtol),
        float(atol),
        int(max_steps),
        int(stride),
    )
    status = {0: "", 1: "step budget exhausted", 2: "step size underflow"}[code]
    return times, states, int(accepted), int(rejected), status
