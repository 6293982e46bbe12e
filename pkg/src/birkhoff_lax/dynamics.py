"""Time integration and drift diagnostics.

Two integrators are provided: an embedded Runge-Kutta 5(4) pair with
adaptive steps for the polynomial Flaschka flows, and fixed-step
Stormer-Verlet (leapfrog) for the canonical kinetic-plus-potential
systems.  Both are deterministic: identical config and initial condition
reproduce the trajectory bitwise on a given build.

The adaptive controller bounds the local error per unit time (the
classical Fehlberg convention), so the error accumulated over [0, T] is
close to T * rtol rather than (step count) * rtol; invariant-drift
tolerances in the test suites rely on this.

Vector fields carrying a ``kernel_name`` attribute ("kt" or "dn") are
dispatched to the compiled kernel when the extension is available; the
pure-python loop below implements the same pair with the same step
control, so results agree to integration accuracy either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import backend
from .errors import DimensionError, DomainError, EvaluationError, IntegrationError

_EPS = np.finfo(float).eps

# Dormand-Prince 5(4) tableau.  The last weight row doubles as the
# propagating solution (FSAL: the seventh stage is the first stage of the
# next step).
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_ERR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
_DP_A_ROWS = tuple(np.array(row) for row in _DP_A)
_DP_ERR_ROW = np.array(_DP_ERR)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_SAFETY = 0.9


@dataclass(frozen=True)
class IntegratorConfig:
    """Settings shared by both integrators.

    ``method`` selects the integrator ("adaptive-rk" or "leapfrog"); the
    leapfrog path uses ``initial_step`` as its fixed step and is only
    valid for canonical separable Hamiltonians.
    """

    t_end: float
    method: str = "adaptive-rk"
    initial_step: float = 1e-2
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 10_000_000
    sample_stride: int = 1

    def __post_init__(self):
        if self.method not in ("adaptive-rk", "leapfrog"):
            raise DomainError(f"unknown integrator method {self.method!r}")
        if not self.t_end > 0.0:
            raise DomainError("t_end must be positive")
        if not 0.0 < self.rtol <= 1e-2:
            raise DomainError("rtol must lie in (0, 1e-2]")
        if not 0.0 < self.atol <= 1e-2:
            raise DomainError("atol must lie in (0, 1e-2]")
        if not self.initial_step > 0.0:
            raise DomainError("initial_step must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be at least 1")
        if self.sample_stride < 1:
            raise DomainError("sample_stride must be at least 1")


@dataclass
class Trajectory:
    """Sampled states of one integration run.

    ``states[k]`` is the state at ``times[k]``; the first sample is the
    initial condition.  ``invariant_series`` holds named per-sample
    evaluations attached after integration.
    """

    times: np.ndarray
    states: np.ndarray
    invariant_series: dict[str, np.ndarray] = field(default_factory=dict)
    accepted: int = 0
    rejected: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise DimensionError("times must be 1-D and states 2-D")
        if self.times.size != self.states.shape[0]:
            raise DimensionError("times and states must have equal length")
        if self.times.size and np.any(np.diff(self.times) <= 0.0):
            raise DomainError("sample times must be strictly increasing")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _rk45_generic(field, x0: np.ndarray, cfg: IntegratorConfig):
    """Pure-python embedded RK5(4) loop; mirrors the compiled kernel."""
    y = np.array(x0, dtype=float)
    m = y.size
    t = 0.0
    h = min(cfg.initial_step, cfg.t_end)
    k = np.empty((7, m))
    k[0] = field(y)
    times = [0.0]
    states = [y.copy()]
    accepted = 0
    rejected = 0
    attempts = 0
    status = None
    while t < cfg.t_end:
        attempts += 1
        if attempts > cfg.max_steps:
            status = "step budget exhausted"
            break
        if h < 16.0 * _EPS * max(1.0, t):
            status = "step size underflow"
            break
        remaining = cfg.t_end - t
        last = h >= remaining
        if last:
            h = remaining
        for s in range(1, 7):
            ys = y + h * (_DP_A_ROWS[s] @ k[:s])
            k[s] = field(ys)
        ynew = ys  # seventh stage node is the order-5 solution
        err_vec = h * (_DP_ERR_ROW @ k)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(ynew))
        # error per unit step: local error ~ C h^5, so the ratio goes as h^4
        ratio = math.sqrt(float(np.mean((err_vec / scale) ** 2))) / h
        if ratio <= 1.0:
            accepted += 1
            t = cfg.t_end if last else t + h
            y = ynew.copy()
            k[0] = k[6]
            if accepted % cfg.sample_stride == 0 or t >= cfg.t_end:
                times.append(t)
                states.append(y.copy())
            factor = _MAX_FACTOR if ratio == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * ratio ** -0.25)
            )
            h *= factor
        else:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * ratio ** -0.25)
    traj = Trajectory(
        times=np.array(times),
        states=np.array(states),
        accepted=accepted,
        rejected=rejected,
    )
    if status is not None:
        raise IntegrationError(
            f"{status} at t = {t:.6g} (accepted {accepted}, rejected {rejected})",
            trajectory=traj,
        )
    return traj


def integrate_flaschka(
    field: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    cfg: IntegratorConfig,
    backend_choice: str = "auto",
) -> Trajectory:
    """Integrate a polynomial flow with the adaptive embedded pair.

    ``backend_choice`` is "auto" (compiled kernel when available and the
    field is tagged with a known ``kernel_name``), "pure", or "compiled".
    """
    if cfg.method != "adaptive-rk":
        raise DomainError("integrate_flaschka requires method 'adaptive-rk'")
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1:
        raise DimensionError("initial state must be 1-D")
    kernel = getattr(field, "kernel_name", None)
    if backend_choice == "compiled" and (kernel is None or not backend.HAVE_COMPILED):
        raise DomainError(
            "compiled backend requested but unavailable for this field"
        )
    use_compiled = (
        backend_choice in ("auto", "compiled")
        and kernel in backend.KERNELS
        and backend.HAVE_COMPILED
    )
    if not use_compiled:
        return _rk45_generic(field, x0, cfg)

    times, states, accepted, rejected, status = backend.rk45_lattice(
        kernel,
        x0,
        cfg.t_end,
        min(cfg.initial_step, cfg.t_end),
        cfg.rtol,
        cfg.atol,
        cfg.max_steps,
        cfg.sample_stride,
    )
    traj = Trajectory(
        times=times, states=states, accepted=accepted, rejected=rejected
    )
    if status:
        raise IntegrationError(
            f"{status} at t = {times[-1]:.6g} "
            f"(accepted {accepted}, rejected {rejected})",
            trajectory=traj,
        )
    return traj


def integrate_canonical(
    grad_V: Callable[[np.ndarray], np.ndarray],
    q0: Sequence[float],
    p0: Sequence[float],
    cfg: IntegratorConfig,
) -> Trajectory:
    """Fixed-step Stormer-Verlet for H = |p|^2/2 + V(q).

    The step is nudged to the nearest divisor of ``t_end`` so the final
    sample lands exactly on it.  States are stored as concatenated (q, p).
    """
    if cfg.method != "leapfrog":
        raise DomainError("integrate_canonical requires method 'leapfrog'")
    q = np.array(q0, dtype=float)
    p = np.array(p0, dtype=float)
    if q.shape != p.shape or q.ndim != 1:
        raise DimensionError("q0 and p0 must be 1-D arrays of equal length")
    nsteps = max(1, round(cfg.t_end / cfg.initial_step))
    if nsteps > cfg.max_steps:
        raise DomainError(
            f"{nsteps} leapfrog steps exceed max_steps={cfg.max_steps}"
        )
    h = cfg.t_end / nsteps
    times = [0.0]
    states = [np.concatenate([q, p])]
    g = grad_V(q)
    for step in range(1, nsteps + 1):
        p_half = p - 0.5 * h * g
        q = q + h * p_half
        g = grad_V(q)
        p = p_half - 0.5 * h * g
        if step % cfg.sample_stride == 0 or step == nsteps:
            times.append(step * h)
            states.append(np.concatenate([q, p]))
    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        accepted=nsteps,
        rejected=0,
    )


def evaluate_invariants(
    traj: Trajectory, invariants: Mapping[str, Callable[[np.ndarray], float]]
) -> dict[str, np.ndarray]:
    """Evaluate named scalar fields at every sample of the trajectory."""
    return {
        name: np.array([float(f(state)) for state in traj.states])
        for name, f in invariants.items()
    }


@dataclass(frozen=True)
class DriftEntry:
    """Maximal relative drift of one invariant and the time it occurs."""

    max_drift: float
    t_at_max: float
    reference: float


def drift_report(
    traj: Trajectory, invariants: Mapping[str, Callable[[np.ndarray], float]]
) -> dict[str, DriftEntry]:
    """Per-invariant max_t |f(x(t)) - f(x(0))| / max(1, |f(x(0))|)."""
    report = {}
    for name, series in evaluate_invariants(traj, invariants).items():
        ref = series[0]
        drift = np.abs(series - ref) / max(1.0, abs(ref))
        worst = int(np.argmax(drift))
        report[name] = DriftEntry(
            max_drift=float(drift[worst]),
            t_at_max=float(traj.times[worst]),
            reference=float(ref),
        )
    return report


def eigenvalue_drift(
    traj: Trajectory, matrix_builder: Callable[[np.ndarray], np.ndarray]
) -> float:
    """Max over time of the sorted-eigenvalue displacement (sup norm).

    The builder must yield Hermitian matrices; a non-Hermitian result
    (relative defect above 1e-8) raises an error rather than silently
    returning the eigenvalues of something else.
    """
    reference = None
    worst = 0.0
    for state in traj.states:
        M = np.asarray(matrix_builder(state))
        defect = float(np.max(np.abs(M - M.conj().T)))
        if defect > 1e-8 * (1.0 + float(np.max(np.abs(M)))):
            raise EvaluationError(
                f"matrix builder produced a non-Hermitian matrix (defect {defect:.3g})"
            )
        eigs = np.linalg.eigvalsh(M)
        if reference is None:
            reference = eigs
        else:
            worst = max(worst, float(np.max(np.abs(eigs - reference))))
    return worst


def write_trajectory_csv(traj: Trajectory, fh) -> None:
    """CSV serialization: header t, x_1..x_m, inv_1..inv_k; 17 significant
    digits per float."""
    m = traj.states.shape[1]
    inv_names = list(traj.invariant_series)
    header = (
        ["t"]
        + [f"x_{j + 1}" for j in range(m)]
        + [f"inv_{j + 1}" for j in range(len(inv_names))]
    )
    fh.write(",".join(header) + "\n")
    series = [traj.invariant_series[name] for name in inv_names]
    for idx in range(traj.times.size):
        row = [traj.times[idx], *traj.states[idx], *(s[idx] for s in series)]
        fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
