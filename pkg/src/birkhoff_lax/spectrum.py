"""Exponential-interaction systems described by their spectrum.

A Hamiltonian of the form ``H = |p|^2/2 + sum_i exp((v_i, q))`` is fully
determined by the finite set of exponent vectors ``v_1..v_N`` in R^n (its
spectrum).  This module provides the Gram/diagram machinery used to test
the necessary condition for Birkhoff integrability, the generalized
(unscaled) Flaschka transform ``a_i = -exp((v_i,q)), b_i = (v_i,p)``, the
induced polynomial flow, and the Casimir-type integrals attached to linear
relations among the exponent vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import ClassificationError, DimensionError, DomainError, EvaluationError

# Two vectors count as sharing a direction when the cosine of their angle
# exceeds this; used both for maximality grouping and linear-dependence
# screening of pairs.
_DIRECTION_COS_TOL = 1e-12

# Ratios and edge multiplicities must sit within this distance of an integer.
INTEGER_TOL = 1e-9

# Relative singular-value cutoff for numerical rank / nullspace decisions.
NULLSPACE_CUTOFF = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Spectrum:
    """Ordered set of exponent vectors, one per interaction term.

    ``vectors`` is an (N, n) array; every row must be nonzero.
    """

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionError("spectrum must be a nonempty (N, n) array of vectors")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(norms == 0.0):
            raise DomainError("spectrum contains a zero vector")
        object.__setattr__(self, "vectors", _readonly(arr))

    @property
    def n(self) -> int:
        """Ambient dimension (number of position coordinates)."""
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        """Number of exponent vectors N."""
        return self.vectors.shape[0]


@dataclass(frozen=True)
class GeneralFlaschkaPoint:
    """Transformed phase point (a_1..a_N, b_1..b_N) of the unscaled transform."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise DimensionError("a and b must be 1-D arrays of equal length")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))


@dataclass(frozen=True)
class CasimirDirection:
    """Coefficients lam with sum_i lam_i v_i = 0 for some spectrum."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "lam", _readonly(lam))

    def residual(self, s: Spectrum) -> float:
        """Norm of sum_i lam_i v_i (zero for a genuine relation)."""
        return float(np.linalg.norm(self.lam @ s.vectors))


@dataclass(frozen=True)
class PairCheck:
    """One tested (maximal, other) pair of the necessary condition."""

    i: int
    j: int
    ratio: float
    ok: bool


@dataclass(frozen=True)
class ClassificationReport:
    """Outcome of the nonpositive-integer ratio test over all relevant pairs."""

    maximal: tuple[int, ...]
    pairs: tuple[PairCheck, ...]
    passed: bool

    @property
    def violations(self) -> tuple[PairCheck, ...]:
        return tuple(p for p in self.pairs if not p.ok)

    def summary(self) -> str:
        """Structured plain-text report (1-based vector labels)."""
        lines = ["necessary-condition report"]
        lines.append(
            "maximal vectors: " + ", ".join(f"v{i + 1}" for i in self.maximal)
        )
        lines.append(f"tested pairs: {len(self.pairs)}")
        for p in self.pairs:
            status = "ok" if p.ok else "VIOLATION"
            lines.append(
                f"  2(v{p.i + 1},v{p.j + 1})/(v{p.i + 1},v{p.i + 1}) = "
                f"{p.ratio:.12g}  [{status}]"
            )
        lines.append("result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


@dataclass(frozen=True)
class DynkinDiagram:
    """Weighted multigraph on the spectrum vectors.

    ``weights[i]`` is the squared length of v_i divided by the greatest
    common rational divisor of all squared lengths; ``edges`` maps each
    connected unordered pair (i, j), i < j, to its multiplicity
    ``4 (v_i,v_j)^2 / ((v_i,v_i)(v_j,v_j))``.
    """

    weights: tuple[Fraction, ...]
    edges: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", MappingProxyType(dict(self.edges)))

    def multiplicity(self, i: int, j: int) -> int:
        if i == j:
            return 0
        key = (min(i, j), max(i, j))
        return self.edges.get(key, 0)

    def adjacency_text(self) -> str:
        lines = ["vertex weights: " + " ".join(str(w) for w in self.weights)]
        if not self.edges:
            lines.append("edges: none")
        else:
            lines.append("edges:")
            for (i, j), m in sorted(self.edges.items()):
                lines.append(f"  v{i + 1} -- v{j + 1}  x{m}")
        return "\n".join(lines)


def gram(s: Spectrum) -> np.ndarray:
    """Matrix of pairwise inner products, mirrored so it is exactly symmetric."""
    m = s.vectors @ s.vectors.T
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def kt_ratio(vi: Sequence[float], vj: Sequence[float]) -> float:
    """The ratio 2 (v_i, v_j) / (v_i, v_i)."""
    vi = np.asarray(vi, dtype=float)
    vj = np.asarray(vj, dtype=float)
    nn = float(vi @ vi)
    if nn == 0.0:
        raise DomainError("ratio undefined for a zero reference vector")
    return 2.0 * float(vi @ vj) / nn


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def maximal_vectors(s: Spectrum) -> tuple[int, ...]:
    """Indices of vectors of greatest length among those sharing a direction.

    Within a group of same-direction vectors of equal maximal length, the
    lowest index represents the group.
    """
    units = _unit_rows(s.vectors)
    norms = np.linalg.norm(s.vectors, axis=1)
    maximal = []
    for i in range(s.size):
        cos = units @ units[i]
        group = np.flatnonzero(cos > 1.0 - _DIRECTION_COS_TOL)
        if i == int(group[np.argmax(norms[group])]):
            maximal.append(i)
    return tuple(maximal)


def check_birkhoff_necessary(s: Spectrum, tol: float = INTEGER_TOL) -> ClassificationReport:
    """Test that every (maximal, independent) ratio is a nonpositive integer.

    For each maximal vector v_i and each v_j linearly independent of it,
    2(v_i,v_j)/(v_i,v_i) must lie in {0, -1, -2, ...} to within ``tol``.
    Violations are reported, not raised.
    """
    units = _unit_rows(s.vectors)
    maximal = maximal_vectors(s)
    pairs = []
    for i in maximal:
        for j in range(s.size):
            if j == i:
                continue
            if abs(float(units[i] @ units[j])) > 1.0 - _DIRECTION_COS_TOL:
                continue  # linearly dependent pair: not covered by the condition
            r = kt_ratio(s.vectors[i], s.vectors[j])
            nearest = round(r)
            ok = abs(r - nearest) <= tol and nearest <= 0
            pairs.append(PairCheck(i, j, r, ok))
    passed = all(p.ok for p in pairs)
    return ClassificationReport(maximal=maximal, pairs=tuple(pairs), passed=passed)


def _as_fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10**9)


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def dynkin_diagram(s: Spectrum, tol: float = INTEGER_TOL) -> DynkinDiagram:
    """Diagram with 4(v_i,v_j)^2/((v_i,v_i)(v_j,v_j)) edges per pair.

    Vertex weights are the squared lengths divided by their greatest common
    rational divisor, so e.g. a simple-root chain gets all-ones labels.
    """
    m = gram(s)
    diag = np.diag(m)
    edges: dict[tuple[int, int], int] = {}
    for i in range(s.size):
        for j in range(i + 1, s.size):
            mult = 4.0 * m[i, j] ** 2 / (diag[i] * diag[j])
            nearest = round(mult)
            if abs(mult - nearest) > tol:
                raise ClassificationError(
                    f"edge multiplicity for pair (v{i + 1}, v{j + 1}) is "
                    f"{mult:.12g}, not an integer"
                )
            if nearest > 0:
                edges[(i, j)] = int(nearest)
    sq = [_as_fraction(d) for d in diag]
    g = reduce(_fraction_gcd, sq)
    weights = tuple(q / g for q in sq)
    return DynkinDiagram(weights=weights, edges=edges)


def generalized_flaschka(s: Spectrum, q: Sequence[float], p: Sequence[float]) -> GeneralFlaschkaPoint:
    """Unscaled transform a_i = -exp((v_i, q)), b_i = (v_i, p)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.shape != (s.n,) or p.shape != (s.n,):
        raise DimensionError(f"q and p must have length {s.n}")
    a = -np.exp(s.vectors @ q)
    b = s.vectors @ p
    return GeneralFlaschkaPoint(a=a, b=b)


def polynomial_flow(s: Spectrum, x: GeneralFlaschkaPoint) -> GeneralFlaschkaPoint:
    """Time derivative (da, db) with da_k = a_k b_k, db_k = sum_i (v_k,v_i) a_i."""
    if x.a.shape != (s.size,):
        raise DimensionError(f"point must have {s.size} (a, b) components")
    da = x.a * x.b
    db = gram(s) @ x.a
    return GeneralFlaschkaPoint(a=da, b=db)


def casimir_directions(s: Spectrum, cutoff: float = NULLSPACE_CUTOFF) -> list[CasimirDirection]:
    """Orthonormal basis of {lam : sum_i lam_i v_i = 0}.

    Rank is decided by a singular-value cutoff relative to the largest
    singular value.  Empty when the vectors are linearly independent.
    """
    u, sv, _ = np.linalg.svd(s.vectors, full_matrices=True)
    rank = int(np.sum(sv > cutoff * sv[0]))
    return [CasimirDirection(u[:, k]) for k in range(rank, s.size)]


def casimir_values(
    s: Spectrum, direction: CasimirDirection, x: GeneralFlaschkaPoint
) -> tuple[float, float]:
    """The pair (F1, F2) = (sum_i lam_i b_i, prod_i a_i^lam_i).

    Negative a_i with non-integer exponents have no principal value, so F2
    is evaluated as prod |a_i|^lam_i, with the sign prod sign(a_i)^lam_i
    attached only when every lam_i is an integer.
    """
    lam = direction.lam
    if lam.shape != (s.size,):
        raise DimensionError(f"direction must have {s.size} components")
    res = direction.residual(s)
    if res > NULLSPACE_CUTOFF * max(1.0, float(np.linalg.norm(lam))):
        raise DomainError(
            f"direction is not a linear relation of the spectrum (residual {res:.3g})"
        )
    f1 = float(lam @ x.b)

    log_mag = 0.0
    zero_hit = False
    for ai, li in zip(x.a, lam):
        if li == 0.0:
            continue
        if ai == 0.0:
            if li < 0.0:
                raise EvaluationError("a_i = 0 with negative exponent in F2")
            zero_hit = True
            continue
        log_mag += li * math.log(abs(ai))
    mag = 0.0 if zero_hit else math.exp(log_mag)

    rounded = np.round(lam)
    if np.all(np.abs(lam - rounded) <= INTEGER_TOL):
        sign = 1.0
        for ai, li in zip(x.a, rounded.astype(int)):
            if ai < 0.0 and li % 2 != 0:
                sign = -sign
        return f1, sign * mag
    return f1, mag


def kt_spectrum(n: int) -> Spectrum:
    """Exponent vectors of the D-type chain with the doubled -e1 tail.

    Returns the n+2 vectors e_i - e_{i+1} (i = 1..n-1), e_{n-1} + e_n,
    -e_1, -2 e_1, in this order.
    """
    if n < 4:
        raise DomainError("the forked chain needs n >= 4")
    vs = np.zeros((n + 2, n))
    for i in range(n - 1):
        vs[i, i] = 1.0
        vs[i, i + 1] = -1.0
    vs[n - 1, n - 2] = 1.0
    vs[n - 1, n - 1] = 1.0
    vs[n, 0] = -1.0
    vs[n + 1, 0] = -2.0
    return Spectrum(vs)


def dn_spectrum(n: int) -> Spectrum:
    """Simple roots of D_n: e_i - e_{i+1} (i = 1..n-1) and e_{n-1} + e_n."""
    if n < 4:
        raise DomainError("D-type simple roots need n >= 4")
    return Spectrum(kt_spectrum(n).vectors[: n])


def completeness_against(s: Spectrum, candidates: Sequence[Sequence[float]]) -> list[np.ndarray]:
    """Candidate vectors whose addition keeps the necessary condition intact.

    The full completeness property quantifies over all of R^n and is not
    decidable numerically; this checks a user-supplied candidate list only.
    Returns the extending candidates (empty list when the spectrum is
    complete relative to the candidates).  Exact duplicates of existing
    vectors are skipped.
    """
    extending = []
    for cand in candidates:
        v = np.asarray(cand, dtype=float)
        if v.shape != (s.n,):
            raise DimensionError(f"candidate must have length {s.n}")
        if np.linalg.norm(v) == 0.0:
            continue
        if any(np.array_equal(v, row) for row in s.vectors):
            continue
        extended = Spectrum(np.vstack([s.vectors, v]))
        if check_birkhoff_necessary(extended).passed:
            extending.append(v)
    return extending
