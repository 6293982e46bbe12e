"""Structure-matrix Poisson brackets and involution/Casimir diagnostics.

Every bracket here is given by an antisymmetric structure matrix J(x)
whose entries are affine in the state (constant for the canonical
bracket, linear in one a-coordinate for the lattice brackets), so
{f, g} = grad(f)^T J grad(g).  The coordinate ordering contract is
a-block first, then b-block (positions before momenta for the canonical
bracket); all vector fields and Jacobians in the package share it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError
from .spectrum import Spectrum, gram

# Default relative step for central finite-difference gradients.
FD_STEP = 1e-6


@dataclass(frozen=True)
class ScalarField:
    """A scalar function of the state with an optional exact gradient.

    When no gradient is supplied, central finite differences with a
    per-coordinate step ``FD_STEP * max(1, |x_j|)`` are used.
    """

    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""

    def __call__(self, state: np.ndarray) -> float:
        return float(self.f(state))

    def gradient(self, state: np.ndarray) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(state), dtype=float)
        return finite_difference_gradient(self.f, state)


def finite_difference_gradient(
    f: Callable[[np.ndarray], float], state: np.ndarray, step: float = FD_STEP
) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    out = np.empty(state.size)
    for j in range(state.size):
        h = step * max(1.0, abs(state[j]))
        xp = state.copy()
        xm = state.copy()
        xp[j] += h
        xm[j] -= h
        out[j] = (f(xp) - f(xm)) / (2.0 * h)
    return out


def as_scalar_field(f) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    return ScalarField(f=f)


# One upper-triangle structure entry: J[i, j] = const + coeff * state[index].
@dataclass(frozen=True)
class _Term:
    i: int
    j: int
    const: float = 0.0
    coeff: float = 0.0
    index: int = 0


@dataclass(frozen=True)
class BracketStructure:
    """Antisymmetric structure matrix built from upper-triangle terms."""

    name: str
    dimension: int
    terms: tuple[_Term, ...] = field(default_factory=tuple)

    def entry(self, state: np.ndarray, i: int, j: int) -> float:
        """J_ij(state) for a single index pair."""
        return float(self.matrix(state)[i, j])

    def matrix(self, state: np.ndarray) -> np.ndarray:
        return structure_matrix(self, state)


def structure_matrix(br: BracketStructure, state: np.ndarray) -> np.ndarray:
    """The m x m antisymmetric matrix J(state)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (br.dimension,):
        raise DimensionError(
            f"bracket '{br.name}' needs a state of length {br.dimension}"
        )
    J = np.zeros((br.dimension, br.dimension))
    for t in br.terms:
        val = t.const + t.coeff * state[t.index]
        J[t.i, t.j] += val
        J[t.j, t.i] -= val
    return J


def canonical_bracket(n: int) -> BracketStructure:
    """Constant symplectic structure {q_i, p_i} = 1 on (q, p) in R^{2n}."""
    terms = tuple(_Term(i=i, j=n + i, const=1.0) for i in range(n))
    return BracketStructure(name="canonical", dimension=2 * n, terms=terms)


def pi1_bracket(n: int) -> BracketStructure:
    """Lattice bracket on (a_1..a_n, b_1..b_n) of the D-type chain.

    {a_i, b_i} = -a_i/2, {a_i, b_{i+1}} = a_i/2 (i < n),
    {a_n, b_{n-1}} = -a_n/2.
    """
    terms = [_Term(i=i, j=n + i, coeff=-0.5, index=i) for i in range(n)]
    terms += [_Term(i=i, j=n + i + 1, coeff=0.5, index=i) for i in range(n - 1)]
    terms.append(_Term(i=n - 1, j=2 * n - 2, coeff=-0.5, index=n - 1))
    return BracketStructure(name="pi1", dimension=2 * n, terms=tuple(terms))


def w1_bracket(n: int) -> BracketStructure:
    """Extension of the D-type bracket to (a_1..a_{n+1}, b_1..b_n).

    Adds {a_{n+1}, b_1} = +a_{n+1}/2 to the pi1 rules; dimension 2n+1.
    """
    off = n + 1  # b-block offset
    terms = [_Term(i=i, j=off + i, coeff=-0.5, index=i) for i in range(n)]
    terms += [_Term(i=i, j=off + i + 1, coeff=0.5, index=i) for i in range(n - 1)]
    terms.append(_Term(i=n - 1, j=off + n - 2, coeff=-0.5, index=n - 1))
    terms.append(_Term(i=n, j=off, coeff=0.5, index=n))
    return BracketStructure(name="w1", dimension=2 * n + 1, terms=tuple(terms))


def spectrum_bracket(s: Spectrum) -> BracketStructure:
    """Bracket {b_i, a_j} = (v_i, v_j) a_j on the unscaled variables.

    The linear-relation integrals F1 and F2 are Casimirs of this bracket.
    """
    m = gram(s)
    N = s.size
    terms = []
    for i in range(N):
        for j in range(N):
            if m[i, j] != 0.0:
                # {a_j, b_i} = -(v_i, v_j) a_j, a-block first
                terms.append(_Term(i=j, j=N + i, coeff=-m[i, j], index=j))
    return BracketStructure(name="a66", dimension=2 * N, terms=tuple(terms))


def bracket(br: BracketStructure, f, g, state: np.ndarray) -> float:
    """{f, g}(state) = grad(f)^T J(state) grad(g)."""
    f = as_scalar_field(f)
    g = as_scalar_field(g)
    state = np.asarray(state, dtype=float)
    J = structure_matrix(br, state)
    return float(f.gradient(state) @ J @ g.gradient(state))


def hamiltonian_vector_field(br: BracketStructure, H, state: np.ndarray) -> np.ndarray:
    """The flow direction J(state) grad(H)(state)."""
    H = as_scalar_field(H)
    state = np.asarray(state, dtype=float)
    return structure_matrix(br, state) @ H.gradient(state)


def involution_matrix(br: BracketStructure, fs: Sequence, state: np.ndarray) -> np.ndarray:
    """Matrix of pairwise brackets {f_i, f_j}(state) (antisymmetric)."""
    fields = [as_scalar_field(f) for f in fs]
    state = np.asarray(state, dtype=float)
    J = structure_matrix(br, state)
    grads = np.array([f.gradient(state) for f in fields])
    M = grads @ J @ grads.T
    # antisymmetrize to kill rounding asymmetry from the matrix products
    return 0.5 * (M - M.T)


@dataclass(frozen=True)
class InvolutionReport:
    """Raw and gradient-scaled size of the worst off-diagonal bracket."""

    raw_max: float
    scaled_max: float

    @property
    def max_abs_offdiag(self) -> float:
        return self.raw_max


def involution_report(br: BracketStructure, fs: Sequence, state: np.ndarray) -> InvolutionReport:
    """Worst pairwise bracket, raw and scaled by (1 + |grad_i||grad_j||J|_F).

    The trace integrals grow like high powers of the coordinates, so only
    the scaled figure is tolerance-comparable across states.
    """
    fields = [as_scalar_field(f) for f in fs]
    state = np.asarray(state, dtype=float)
    J = structure_matrix(br, state)
    Jnorm = float(np.linalg.norm(J))
    grads = np.array([f.gradient(state) for f in fields])
    M = grads @ J @ grads.T
    M = 0.5 * (M - M.T)
    raw = 0.0
    scaled = 0.0
    gnorms = np.linalg.norm(grads, axis=1)
    k = len(fields)
    for i in range(k):
        for j in range(i + 1, k):
            raw = max(raw, abs(M[i, j]))
            scaled = max(
                scaled, abs(M[i, j]) / (1.0 + gnorms[i] * gnorms[j] * Jnorm)
            )
    return InvolutionReport(raw_max=raw, scaled_max=scaled)


@dataclass(frozen=True)
class CasimirReport:
    """Worst bracket of a candidate Casimir against the coordinates."""

    max_abs: float
    max_scaled: float
    tolerance: float
    passed: bool
    samples: int


def casimir_check(
    br: BracketStructure, f, sample: Sequence[np.ndarray], tolerance: float = 1e-10
) -> CasimirReport:
    """Evaluate max_j |{f, x_j}| over the sample states.

    Passes when the worst scaled value (scale 1 + |grad f| |J|_F) stays
    within ``tolerance``.  {f, x_j} over all j is the vector -J grad(f).
    """
    f = as_scalar_field(f)
    worst_raw = 0.0
    worst_scaled = 0.0
    count = 0
    for state in sample:
        state = np.asarray(state, dtype=float)
        J = structure_matrix(br, state)
        g = f.gradient(state)
        raw = float(np.max(np.abs(J @ g)))
        scale = 1.0 + float(np.linalg.norm(g)) * float(np.linalg.norm(J))
        worst_raw = max(worst_raw, raw)
        worst_scaled = max(worst_scaled, raw / scale)
        count += 1
    return CasimirReport(
        max_abs=worst_raw,
        max_scaled=worst_scaled,
        tolerance=tolerance,
        passed=worst_scaled <= tolerance,
        samples=count,
    )
