"""The open D-type Toda lattice: Hamiltonian, Flaschka chart, Lax matrices.

State layout follows the global a-block-then-b-block contract: a point of
the lattice is (a_1..a_n, b_1..b_n) with n >= 4.  The 2n x 2n symmetric
Lax matrix L carries (b_1..b_n, -b_n..-b_1) on the diagonal, the chain
couplings a_1..a_{n-1} on the superdiagonal of each half (negated in the
mirror half), and the fork coupling a_n at the four positions
(n-1, n+1), (n, n+2) and their transposes, with sign -a_n on the first
pair.  All index comments in this module are 1-based to match that
description; the code is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, EvaluationError

# A flow-transported determinant may round slightly below zero; anything
# beyond this relative tolerance flags a malformed matrix.
_DET_SIGN_TOL = 1e-9


def _readonly(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DnFlaschkaPoint:
    """Flaschka variables (a_1..a_n, b_1..b_n) of the D-type lattice.

    Points in the image of the transform have every a_i > 0; the algebraic
    operations are polynomial and accept arbitrary real values (a_i = 0 is
    an invariant plane used by reduction tests).
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
            raise DimensionError("a and b must be 1-D arrays of equal length n")
        if a.size < 4:
            raise DomainError("the D-type lattice needs n >= 4")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))

    @property
    def n(self) -> int:
        return self.a.size

    def state(self) -> np.ndarray:
        """Concatenated (a, b) state vector."""
        return np.concatenate([self.a, self.b])


def point_from_state(state: np.ndarray) -> DnFlaschkaPoint:
    """Inverse of :meth:`DnFlaschkaPoint.state`."""
    state = np.asarray(state, dtype=float)
    if state.ndim != 1 or state.size % 2 != 0:
        raise DimensionError("state must be a flat (a, b) vector of even length")
    n = state.size // 2
    return DnFlaschkaPoint(a=state[:n], b=state[n:])


def _check_qp(q, p) -> tuple[np.ndarray, np.ndarray]:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.ndim != 1 or q.shape != p.shape:
        raise DimensionError("q and p must be 1-D arrays of equal length")
    if q.size < 4:
        raise DomainError("the D-type lattice needs n >= 4")
    return q, p


def dn_hamiltonian(q, p) -> float:
    """Kinetic term plus the n exponential couplings of the D-type chain."""
    q, p = _check_qp(q, p)
    val = 0.5 * float(p @ p)
    val += float(np.sum(np.exp(q[:-1] - q[1:])))
    val += float(np.exp(q[-2] + q[-1]))
    return val


def dn_potential_gradient(q) -> np.ndarray:
    """Gradient of the potential part of :func:`dn_hamiltonian`."""
    q = np.asarray(q, dtype=float)
    n = q.size
    chain = np.exp(q[:-1] - q[1:])
    fork = np.exp(q[-2] + q[-1])
    grad = np.zeros(n)
    grad[:-1] += chain
    grad[1:] -= chain
    grad[n - 2] += fork
    grad[n - 1] += fork
    return grad


def dn_flaschka(q, p) -> DnFlaschkaPoint:
    """Half-exponent transform a_i = exp((q_i - q_{i+1})/2)/2, b_i = -p_i/2.

    The fork variable is a_n = exp((q_{n-1} + q_n)/2)/2.
    """
    q, p = _check_qp(q, p)
    a = np.empty(q.size)
    a[:-1] = 0.5 * np.exp(0.5 * (q[:-1] - q[1:]))
    a[-1] = 0.5 * np.exp(0.5 * (q[-2] + q[-1]))
    return DnFlaschkaPoint(a=a, b=-0.5 * p)


def dn_vector_field(x: DnFlaschkaPoint) -> DnFlaschkaPoint:
    """Equations of motion in Flaschka variables.

    da_i = a_i (b_{i+1} - b_i) for i < n, da_n = -a_n (b_{n-1} + b_n);
    db_i = 2 (a_i^2 - a_{i-1}^2) for i <= n-2 and i = n (no a_0 term),
    db_{n-1} = 2 (a_n^2 + a_{n-1}^2 - a_{n-2}^2).
    """
    a, b, n = x.a, x.b, x.n
    da = np.empty(n)
    da[: n - 1] = a[: n - 1] * (b[1:] - b[: n - 1])
    da[n - 1] = -a[n - 1] * (b[n - 2] + b[n - 1])
    a2 = a * a
    db = np.empty(n)
    db[0] = 2.0 * a2[0]
    db[1 : n - 2] = 2.0 * (a2[1 : n - 2] - a2[: n - 3])
    db[n - 2] = 2.0 * (a2[n - 1] + a2[n - 2] - a2[n - 3])
    db[n - 1] = 2.0 * (a2[n - 1] - a2[n - 2])
    return DnFlaschkaPoint(a=da, b=db)


def dn_flow(state: np.ndarray) -> np.ndarray:
    """Vector-field callable on flat states, for the integrators."""
    x = point_from_state(state)
    return dn_vector_field(x).state()


dn_flow.kernel_name = "dn"


def _build_L_from_ab(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = b.size
    L = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    L[idx, idx] = b
    L[2 * n - 1 - idx, 2 * n - 1 - idx] = -b
    for i in range(n - 1):
        L[i, i + 1] = L[i + 1, i] = a[i]
        L[2 * n - 2 - i, 2 * n - 1 - i] = L[2 * n - 1 - i, 2 * n - 2 - i] = -a[i]
    L[n - 2, n] = L[n, n - 2] = -a[n - 1]
    L[n - 1, n + 1] = L[n + 1, n - 1] = a[n - 1]
    return L


def build_L(x: DnFlaschkaPoint) -> np.ndarray:
    """Symmetric 2n x 2n Lax matrix (traceless by the +-b pairing)."""
    return _build_L_from_ab(x.a, x.b)


def build_B(x: DnFlaschkaPoint) -> np.ndarray:
    """Antisymmetric partner: strict upper triangle of L, antisymmetrized."""
    L = build_L(x)
    upper = np.triu(L, 1)
    return upper - upper.T


def build_L2(x: DnFlaschkaPoint) -> np.ndarray:
    """The squared Lax matrix L @ L (the derived pair (L^2, B))."""
    L = build_L(x)
    return L @ L


def dn_lax_derivative(x: DnFlaschkaPoint) -> np.ndarray:
    """Analytic d/dt of L along the flow; exact since L is linear in (a, b)."""
    dot = dn_vector_field(x)
    return _build_L_from_ab(dot.a, dot.b)


def dn_lax_residual(x: DnFlaschkaPoint) -> float:
    """Frobenius norm of dL/dt - (B L - L B); zero up to rounding."""
    L = build_L(x)
    B = build_B(x)
    return float(np.linalg.norm(dn_lax_derivative(x) - (B @ L - L @ B)))


def dn_quadratic_lax_residual(x: DnFlaschkaPoint) -> float:
    """Frobenius norm of d(L^2)/dt - (B L^2 - L^2 B)."""
    L = build_L(x)
    B = build_B(x)
    dL = dn_lax_derivative(x)
    dL2 = dL @ L + L @ dL
    L2 = L @ L
    return float(np.linalg.norm(dL2 - (B @ L2 - L2 @ B)))


def dn_h2(x: DnFlaschkaPoint) -> float:
    """Quadratic invariant sum b_i^2 + 2 sum a_i^2 (equals Tr L^2 / 2)."""
    return float(x.b @ x.b + 2.0 * (x.a @ x.a))


def dn_invariants(L: np.ndarray) -> np.ndarray:
    """Trace invariants (H_2, H_4, ..., H_{2n-2}) and the determinant root P_n.

    H_{2i} = Tr L^{2i} / (2i).  P_n is the square root of (-1)^n det L:
    the diagonal limit L = diag(b, -b reversed) shows det L carries the
    sign (-1)^n, so the radicand is (-1)^n det L, nonnegative for valid L.
    Returns the n values (H_2, ..., H_{2n-2}, P_n).
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] % 2 != 0:
        raise DimensionError("L must be square of even order 2n")
    n = L.shape[0] // 2
    out = np.empty(n)
    L2 = L @ L
    power = L2
    for i in range(1, n):
        out[i - 1] = np.trace(power) / (2.0 * i)
        if i < n - 1:
            power = power @ L2
    det = float(np.linalg.det(L))
    radicand = det if n % 2 == 0 else -det
    scale = max(1.0, float(np.max(np.abs(L))) ** (2 * n))
    if radicand < -_DET_SIGN_TOL * scale:
        raise EvaluationError(
            f"(-1)^n det L = {radicand:.3g} is negative beyond tolerance; "
            "matrix is not a valid lattice Lax matrix"
        )
    out[n - 1] = np.sqrt(max(radicand, 0.0))
    return out
