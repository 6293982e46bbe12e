"""The forked exponential lattice with the doubled -q_1 tail.

This is the D-type chain of :mod:`birkhoff_lax.dn_toda` with two extra
potential terms exp(-q_1) + exp(-2 q_1), carried by one additional
Flaschka variable a_{n+1} = exp(-q_1/2)/sqrt(2).  Its Lax pair (A, C) is
a complex perturbation of the squared D-type pair (L^2, B): A differs
from L^2 at six entries (the two outer diagonal corners and the two
adjacent off-diagonal pairs), C differs from B at the two outer diagonal
corners.  A is Hermitian and C anti-Hermitian by construction, and
dA/dt = C A - A C holds identically along the flow.

The integrals are h_{2i} = Tr A^i / 2 for i = 1..n; h_2 equals the
Hamiltonian in Flaschka variables (which is half the canonical one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dn_toda
from .errors import DimensionError, DomainError, EvaluationError

_SQRT2 = np.sqrt(2.0)

# Tolerance (relative) for the imaginary part of trace invariants; a
# Hermitian A forces exactly real traces, so violations flag a bad build.
_TRACE_IMAG_TOL = 1e-10

# Relative singular-value cutoff for the integral-independence rank.
RANK_CUTOFF = 1e-8


def _readonly(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class KtFlaschkaPoint:
    """Flaschka variables (a_1..a_{n+1}, b_1..b_n), n >= 4.

    Transform images have all a_i > 0; the operations themselves are
    polynomial and accept any real values (a_{n+1} = 0 reduces every
    construction to its D-type counterpart).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.ndim != 1 or b.ndim != 1 or a.size != b.size + 1:
            raise DimensionError("expected n+1 a-components and n b-components")
        if b.size < 4:
            raise DomainError("the forked lattice needs n >= 4")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))

    @property
    def n(self) -> int:
        return self.b.size

    def state(self) -> np.ndarray:
        """Concatenated (a, b) state vector of length 2n+1."""
        return np.concatenate([self.a, self.b])

    def dn_part(self) -> dn_toda.DnFlaschkaPoint:
        """The underlying D-type point (a_1..a_n, b)."""
        return dn_toda.DnFlaschkaPoint(a=self.a[:-1], b=self.b)


def point_from_state(state: np.ndarray) -> KtFlaschkaPoint:
    """Inverse of :meth:`KtFlaschkaPoint.state`."""
    state = np.asarray(state, dtype=float)
    if state.ndim != 1 or state.size % 2 != 1:
        raise DimensionError("state must be a flat (a, b) vector of odd length 2n+1")
    n = (state.size - 1) // 2
    return KtFlaschkaPoint(a=state[: n + 1], b=state[n + 1 :])


def _check_qp(q, p) -> tuple[np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.ndim != 1 or q.shape != p.shape:
        raise DimensionError("q and p must be 1-D arrays of equal length")
    if q.size < 4:
        raise DomainError("the forked lattice needs n >= 4")
    return q, p


def kt_hamiltonian(q, p) -> float:
    """D-type chain energy plus the tail terms exp(-q_1) + exp(-2 q_1)."""
    q, p = _check_qp(q, p)
    return dn_toda.dn_hamiltonian(q, p) + float(np.exp(-q[0]) + np.exp(-2.0 * q[0]))


def kt_potential_gradient(q) -> np.ndarray:
    """Gradient of the potential part of :func:`kt_hamiltonian`."""
    q = np.asarray(q, dtype=float)
    grad = dn_toda.dn_potential_gradient(q)
    grad[0] += -np.exp(-q[0]) - 2.0 * np.exp(-2.0 * q[0])
    return grad


def kt_flaschka(q, p) -> KtFlaschkaPoint:
    """D-type transform extended by a_{n+1} = exp(-q_1/2)/sqrt(2)."""
    q, p = _check_qp(q, p)
    base = dn_toda.dn_flaschka(q, p)
    a = np.concatenate([base.a, [np.exp(-0.5 * q[0]) / _SQRT2]])
    return KtFlaschkaPoint(a=a, b=base.b)


def kt_vector_field(x: KtFlaschkaPoint) -> KtFlaschkaPoint:
    """Equations of motion: the D-type field plus the tail couplings.

    da_{n+1} = a_{n+1} b_1 and db_1 = 2 a_1^2 - a_{n+1}^2 - 4 a_{n+1}^4;
    all other components coincide with the D-type lattice.
    """
    base = dn_toda.dn_vector_field(x.dn_part())
    an1 = x.a[-1]
    da = np.concatenate([base.a, [an1 * x.b[0]]])
    db = np.array(base.b)
    db[0] = 2.0 * x.a[0] ** 2 - an1**2 - 4.0 * an1**4
    return KtFlaschkaPoint(a=da, b=db)


def kt_vector_field_literal(x: KtFlaschkaPoint) -> KtFlaschkaPoint:
    """Deliberate-fault variant: db_1 carries -4 a_{n+1}^2 instead of the
    quartic -4 a_{n+1}^4.

    With this field the Lax identity fails at generic points; it exists so
    the CLI can demonstrate that the quartic term is load-bearing.
    """
    base = kt_vector_field(x)
    an1 = x.a[-1]
    db = np.array(base.b)
    db[0] = 2.0 * x.a[0] ** 2 - an1**2 - 4.0 * an1**2
    return KtFlaschkaPoint(a=base.a, b=db)


def kt_flow(state: np.ndarray) -> np.ndarray:
    """Vector-field callable on flat states, for the integrators."""
    return kt_vector_field(point_from_state(state)).state()


kt_flow.kernel_name = "kt"


def kt_flow_literal(state: np.ndarray) -> np.ndarray:
    """Flat-state callable of the deliberate-fault variant."""
    return kt_vector_field_literal(point_from_state(state)).state()


def kt_hamiltonian_flaschka(x: KtFlaschkaPoint) -> float:
    """sum b_i^2 + 2 sum_{i<=n} a_i^2 + a_{n+1}^2 + 2 a_{n+1}^4.

    Equals half of :func:`kt_hamiltonian` on transform images, and equals
    the first trace invariant h_2 everywhere.
    """
    an1 = x.a[-1]
    return float(
        x.b @ x.b + 2.0 * (x.a[:-1] @ x.a[:-1]) + an1**2 + 2.0 * an1**4
    )


def build_A(x: KtFlaschkaPoint) -> np.ndarray:
    """Hermitian Lax matrix: L^2 of the D-type part, perturbed at six entries.

    With m = 2n: A[1,1] = A[m,m] = a_1^2 + b_1^2 + a_{n+1}^2 + 2 a_{n+1}^4,
    A[1,2] = A[m,m-1] = a_1 (b_1 + b_2 + sqrt(2) i a_{n+1}^2), and A[2,1],
    A[m-1,m] their conjugates (1-based positions).
    """
    n = x.n
    A = dn_toda.build_L2(x.dn_part()).astype(complex)
    an1 = x.a[-1]
    m = 2 * n
    A[0, 0] = x.a[0] ** 2 + x.b[0] ** 2 + an1**2 + 2.0 * an1**4
    A[m - 1, m - 1] = A[0, 0]
    off = x.a[0] * (x.b[0] + x.b[1] + _SQRT2 * 1j * an1**2)
    A[0, 1] = off
    A[m - 1, m - 2] = off
    A[1, 0] = np.conj(off)
    A[m - 2, m - 1] = np.conj(off)
    return A


def build_C(x: KtFlaschkaPoint) -> np.ndarray:
    """Anti-Hermitian partner: B of the D-type part with the two outer
    diagonal entries set to sqrt(2) i a_{n+1}^2."""
    n = x.n
    C = dn_toda.build_B(x.dn_part()).astype(complex)
    C[0, 0] = C[2 * n - 1, 2 * n - 1] = _SQRT2 * 1j * x.a[-1] ** 2
    return C


def build_A_derivatives(x: KtFlaschkaPoint) -> np.ndarray:
    """Partial derivatives of A with respect to each coordinate.

    Returns a (2n+1, 2n, 2n) complex array ordered (a_1..a_{n+1}, b_1..b_n).
    For the D-type coordinates, d(L^2) = E L + L E with E the constant
    sparse derivative of L; the six perturbed entries contribute only
    through a_1 and a_{n+1}.
    """
    n = x.n
    m = 2 * n
    L = dn_toda.build_L(x.dn_part())
    derivs = np.zeros((2 * n + 1, m, m), dtype=complex)
    zeros = np.zeros(n)
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        E = dn_toda._build_L_from_ab(unit, zeros)
        derivs[j] = E @ L + L @ E
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        E = dn_toda._build_L_from_ab(zeros, unit)
        derivs[n + 1 + j] = E @ L + L @ E

    an1 = x.a[-1]
    # a_1 also enters the perturbed off-diagonal entries
    d_off = _SQRT2 * 1j * an1**2
    derivs[0][0, 1] += d_off
    derivs[0][m - 1, m - 2] += d_off
    derivs[0][1, 0] += np.conj(d_off)
    derivs[0][m - 2, m - 1] += np.conj(d_off)
    # a_{n+1} enters only the perturbation
    d_diag = 2.0 * an1 + 8.0 * an1**3
    derivs[n][0, 0] = d_diag
    derivs[n][m - 1, m - 1] = d_diag
    d_off = 2.0 * _SQRT2 * 1j * x.a[0] * an1
    derivs[n][0, 1] = d_off
    derivs[n][m - 1, m - 2] = d_off
    derivs[n][1, 0] = np.conj(d_off)
    derivs[n][m - 2, m - 1] = np.conj(d_off)
    return derivs


def kt_lax_derivative(x: KtFlaschkaPoint, field=kt_vector_field) -> np.ndarray:
    """Analytic dA/dt along ``field`` assembled by the chain rule."""
    xdot = field(x).state()
    derivs = build_A_derivatives(x)
    return np.tensordot(xdot, derivs, axes=1)


def kt_lax_residual(x: KtFlaschkaPoint, field=kt_vector_field) -> float:
    """Frobenius norm of dA/dt - (C A - A C); zero up to rounding for the
    true field, order-one for the deliberate-fault variant."""
    A = build_A(x)
    C = build_C(x)
    dA = kt_lax_derivative(x, field=field)
    return float(np.linalg.norm(dA - (C @ A - A @ C)))


def _trace_powers(A: np.ndarray, count: int) -> np.ndarray:
    """Tr A^i for i = 1..count, by repeated multiplication."""
    traces = np.empty(count, dtype=complex)
    power = A
    for i in range(count):
        traces[i] = np.trace(power)
        if i < count - 1:
            power = power @ A
    return traces


def kt_integrals_from_matrix(A: np.ndarray) -> np.ndarray:
    """(h_2, h_4, ..., h_{2n}) = Tr A^i / 2 for i = 1..n, from a built A."""
    n = A.shape[0] // 2
    traces = 0.5 * _trace_powers(A, n)
    for i, t in enumerate(traces):
        if abs(t.imag) > _TRACE_IMAG_TOL * (1.0 + abs(t.real)):
            raise EvaluationError(
                f"trace invariant {i + 1} has imaginary part {t.imag:.3g}; "
                "matrix is not Hermitian"
            )
    return traces.real.copy()


def kt_integrals(x: KtFlaschkaPoint) -> np.ndarray:
    """The n trace integrals (h_2, h_4, ..., h_{2n}) at a point."""
    return kt_integrals_from_matrix(build_A(x))


def kt_integral_gradients(x: KtFlaschkaPoint) -> np.ndarray:
    """Exact Jacobian of the trace integrals, shape (n, 2n+1).

    Row i-1 holds the gradient of h_{2i} = Tr A^i / 2, computed from
    d Tr A^i = i Tr(A^{i-1} dA) with the sparse coordinate derivatives
    of the matrix build.
    """
    n = x.n
    A = build_A(x)
    derivs = build_A_derivatives(x)
    grads = np.empty((n, 2 * n + 1))
    power = np.eye(2 * n, dtype=complex)
    for i in range(1, n + 1):
        # Tr(A^{i-1} dA/dx_j) for every coordinate j at once
        grads[i - 1] = 0.5 * i * np.real(np.einsum("ab,jba->j", power, derivs))
        if i < n:
            power = power @ A
    return grads


def kt_independence_rank(x: KtFlaschkaPoint, cutoff: float = RANK_CUTOFF) -> int:
    """Numerical rank of the integral Jacobian (n at generic points)."""
    sv = np.linalg.svd(kt_integral_gradients(x), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > cutoff * sv[0]))


def kt_casimir_exponents(n: int) -> np.ndarray:
    """Exponent vector of the product Casimir of the lattice bracket:
    (2, ..., 2, 1, 1, 2) over (a_1..a_{n-2}, a_{n-1}, a_n, a_{n+1})."""
    exps = np.full(n + 1, 2.0)
    exps[n - 2] = 1.0
    exps[n - 1] = 1.0
    return exps


def kt_casimir(x: KtFlaschkaPoint) -> float:
    """Value of the product Casimir a_1^2 ... a_{n-2}^2 a_{n-1} a_n a_{n+1}^2."""
    return float(np.prod(x.a ** kt_casimir_exponents(x.n)))
