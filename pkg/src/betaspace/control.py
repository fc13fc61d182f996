"""PI control of first-order-lag translation axes, vanilla and transformed.

Each axis is a unit-time-constant lag driven by a PI controller.  With state
``x = [y; z]`` (outputs and integrated error) the closed loop is::

    A = [[diag(-Kp - 1), diag(Ki)], [-I, 0]]    B = [diag(Kp); I]
    C = [I, 0]                                  D = 0

The transformed system uses ``T = blockdiag(M, M)``: ``A_hat = T A T^-1``,
``B_hat = [M diag(Kp) M^-1; I]``, ``C_hat = C``.  Its reference and output are
read in unit coordinates, so clamping the output to ``[0, 1]^N`` and mapping it
through ``M`` always yields a feasible translation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DimensionMismatch, NonPositiveGain, NoConvergence, NumericalOverflow
from .transform import DEFAULT_TOL, BetaTransform, ConstraintReport, check_constraints

ORIGINAL = "original"
TRANSFORMED = "transformed"
STATE_BOUND = 1e12


@dataclass(frozen=True)
class PIGains:
    kp: tuple[float, ...]
    ki: tuple[float, ...]

    def __post_init__(self) -> None:
        kp = tuple(float(k) for k in self.kp)
        ki = tuple(float(k) for k in self.ki)
        if len(kp) != len(ki) or not kp:
            raise DimensionMismatch(f"need equally many Kp and Ki gains, got {len(kp)} and {len(ki)}")
        bad = [k for k in kp + ki if not k > 0]
        if bad:
            raise NonPositiveGain(f"gains must be positive, got {bad}")
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "ki", ki)

    @property
    def n(self) -> int:
        return len(self.kp)


@dataclass(frozen=True, eq=False)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    coordinates: str = ORIGINAL
    transform: BetaTransform | None = None

    def __post_init__(self) -> None:
        n2 = self.A.shape[0]
        m = self.B.shape[1]
        if (self.A.shape != (n2, n2) or self.B.shape[0] != n2 or self.C.shape[1] != n2
                or self.D.shape != (self.C.shape[0], m)):
            raise DimensionMismatch(
                f"inconsistent shapes A{self.A.shape} B{self.B.shape} C{self.C.shape} D{self.D.shape}")

    @property
    def n_axes(self) -> int:
        return self.C.shape[0]


def build_closed_loop(gains: PIGains) -> StateSpace:
    n = gains.n
    kp, ki = np.array(gains.kp), np.array(gains.ki)
    I, Z = np.eye(n), np.zeros((n, n))
    A = np.block([[np.diag(-kp - 1.0), np.diag(ki)], [-I, Z]])
    B = np.vstack([np.diag(kp), I])
    C = np.hstack([I, Z])
    return StateSpace(A, B, C, np.zeros((n, n)))


def conjugate_diagonal(d) -> np.ndarray:
    """``M diag(d) M^-1`` in closed form; independent of the tube lengths.

    Entry ``[i, j]`` is ``d_j - d_{j+1}`` below the diagonal and ``d_i`` on it.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    out = np.tril(np.broadcast_to(d - np.append(d[1:], 0.0), (n, n)), k=-1)
    out[np.diag_indices(n)] = d
    return out


def closed_form_transformed_blocks(gains: PIGains) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Upper-left and upper-right blocks of ``A_hat`` and the upper block of ``B_hat``."""
    kp, ki = np.array(gains.kp), np.array(gains.ki)
    return conjugate_diagonal(-kp - 1.0), conjugate_diagonal(ki), conjugate_diagonal(kp)


def transform_state_space(ss: StateSpace, t: BetaTransform) -> StateSpace:
    if ss.coordinates != ORIGINAL:
        raise ValueError("state space is already transformed")
    n = t.n
    if ss.n_axes != n or ss.A.shape != (2 * n, 2 * n) or ss.B.shape != (2 * n, n):
        raise DimensionMismatch(f"system has {ss.n_axes} axes, transform has {n}")
    M, Mi = t.matrix, t.inverse
    T = scipy.linalg.block_diag(M, M)
    Ti = scipy.linalg.block_diag(Mi, Mi)
    B_hat = np.vstack([M @ ss.B[:n] @ Mi, ss.B[n:]])
    return StateSpace(T @ ss.A @ Ti, B_hat, ss.C.copy(), ss.D.copy(), TRANSFORMED, t)


def eigenvalues(A) -> np.ndarray:
    """Spectrum sorted by real part, then imaginary part."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    ev = np.asarray(ev, dtype=complex)
    scale = max(1.0, np.abs(ev).max(initial=0.0))
    ev.imag[np.abs(ev.imag) < 1e-14 * scale] = 0.0
    # round the keys so rounding noise in tied real parts cannot reorder pairs
    key_re = np.round(ev.real / scale, 9)
    key_im = np.round(ev.imag / scale, 9)
    return ev[np.lexsort((key_im, key_re))]


@dataclass(frozen=True)
class OrderingReport:
    passed: bool
    kp_violations: tuple[int, ...]  # 1-based i with Kp_i > Kp_{i+1}
    ki_violations: tuple[int, ...]  # 1-based i with Ki_{i+1} > Ki_i

    def as_dict(self) -> dict:
        return {"passed": self.passed, "kp_violations": list(self.kp_violations),
                "ki_violations": list(self.ki_violations)}


def gain_ordering_check(gains: PIGains) -> OrderingReport:
    """``Kp_i <= Kp_{i+1}`` and ``Ki_{i+1} <= Ki_i``; otherwise the transformed
    blocks acquire sub-diagonal couplings of the wrong sign."""
    kp, ki = np.array(gains.kp), np.array(gains.ki)
    kp_bad = tuple(int(i) + 1 for i in np.flatnonzero(kp[:-1] > kp[1:]))
    ki_bad = tuple(int(i) + 1 for i in np.flatnonzero(ki[1:] > ki[:-1]))
    return OrderingReport(not (kp_bad or ki_bad), kp_bad, ki_bad)


def discretize(ss: StateSpace, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold pair ``(Ad, Bd)`` from ``expm([[A, B], [0, 0]] dt)``."""
    n, m = ss.B.shape
    big = np.zeros((n + m, n + m))
    big[:n, :n] = ss.A
    big[:n, n:] = ss.B
    E = scipy.linalg.expm(big * dt)
    return E[:n, :n], E[:n, n:]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """``beta`` holds translations in mm for every time step, after any clamping."""

    t: np.ndarray
    states: np.ndarray
    outputs: np.ndarray  # raw system outputs (unit coordinates for transformed systems)
    beta: np.ndarray
    reports: list[ConstraintReport] = field(repr=False)
    coordinates: str = ORIGINAL

    @property
    def violations(self) -> np.ndarray:
        return np.array([not r.valid for r in self.reports])

    @property
    def violation_count(self) -> int:
        return int(self.violations.sum())


Reference = Callable[[float], Sequence[float]]


def constant(value) -> Reference:
    v = np.asarray(value, dtype=float)
    return lambda _t: v


def simulate(ss: StateSpace, reference: Reference, dt: float, T: float, x0=None, *,
             saturate_unit: bool = False, tubes=None, tol: float = DEFAULT_TOL,
             state_bound: float = STATE_BOUND) -> Trajectory:
    """ZOH simulation over ``t = 0, dt, ..., T``.

    ``reference(t)`` returns the desired translation in mm.  For transformed
    systems it is fed as ``M^-1 r`` and the output ``y`` is mapped back with
    ``beta = M y`` (after clamping to ``[0, 1]`` when ``saturate_unit``).
    ``tubes`` defaults to the transform's tube set and is required for
    original-coordinate systems.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must be at least dt")
    transformed = ss.coordinates == TRANSFORMED
    if tubes is None:
        if ss.transform is None:
            raise ValueError("tubes are required to check constraints")
        tubes = ss.transform.tubes
    t_map = ss.transform
    if transformed and t_map is None:
        raise ValueError("transformed system carries no transform")

    steps = int(round(T / dt))
    times = dt * np.arange(steps + 1)
    Ad, Bd = discretize(ss, dt)
    x = np.zeros(ss.A.shape[0]) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (ss.A.shape[0],):
        raise DimensionMismatch(f"x0 must have {ss.A.shape[0]} entries")

    states = np.empty((steps + 1, x.size))
    for k, tk in enumerate(times):
        states[k] = x
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > state_bound:
            raise NumericalOverflow(f"state norm exceeded {state_bound:g} at t = {tk:g} s",
                                    time=float(tk), step=k)
        if k == steps:
            break
        r = np.asarray(reference(tk), dtype=float)
        if transformed:
            r = t_map.inverse @ r
        x = Ad @ x + Bd @ r

    outputs = states @ ss.C.T
    y = np.clip(outputs, 0.0, 1.0) if (saturate_unit and transformed) else outputs
    beta = y @ t_map.matrix.T if transformed else y
    reports = [check_constraints(tubes, b, tol) for b in beta]
    return Trajectory(times, states, outputs, beta, reports, ss.coordinates)


def step_response_overshoot(gains: PIGains, dt: float = 0.01, T: float = 20.0) -> np.ndarray:
    """Peak over final value of each axis' unit step response."""
    ss = build_closed_loop(gains)
    Ad, Bd = discretize(ss, dt)
    x = np.zeros(2 * gains.n)
    peak = np.zeros(gains.n)
    for _ in range(int(round(T / dt))):
        x = Ad @ x + Bd @ np.ones(gains.n)
        peak = np.maximum(peak, x[:gains.n])
    return peak


# fixture: equal, lightly damped gains and a reference at the fully retracted
# vertex; per-axis overshoot pushes L_1 + beta_1 below zero in the vanilla loop
VIOLATION_GAINS = PIGains((1.0, 1.0, 1.0), (10.0, 10.0, 10.0))
VIOLATION_REFERENCE = (-100.0, -150.0, -200.0)
VIOLATION_LENGTHS = (100.0, 150.0, 200.0)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    n = traj.beta.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"beta_{i + 1}" for i in range(n)] + ["violated", "worst_violation"])
        for tk, b, rep in zip(traj.t, traj.beta, traj.reports):
            w.writerow([repr(float(tk))] + [repr(float(v)) for v in b]
                       + [int(not rep.valid), repr(rep.worst_violation)])


def complex_list(ev: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in ev]


def write_json(record: dict, path) -> None:
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")


def spectrum_distance(a, b) -> float:
    """Largest distance between optimally paired eigenvalues of two spectra."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return float("inf")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max(initial=0.0))


def is_stable(A) -> bool:
    return bool(np.all(eigenvalues(A).real < 0))

