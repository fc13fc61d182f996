"""Lower-triangular map between the unit cube and the feasible translation set.

Tube indexing runs from 1 = outermost tube to N = innermost tube.  A translation
vector ``beta`` (mm, all entries <= 0) is feasible when both chains hold::

    0 >= beta_1 >= beta_2 >= ... >= beta_N
    0 <= L_1 + beta_1 <= L_2 + beta_2 <= ... <= L_N + beta_N

``build_beta_transform`` returns the matrix ``M`` with ``beta = M @ u`` mapping
``u`` in ``[0, 1]^N`` bijectively onto that set.  Inverse and determinant come
from closed forms; numeric inversion is only used as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng
from .errors import (
    InvalidBeta,
    NonIncreasingLengths,
    NonPositiveEffectiveLength,
    OutOfRangeInput,
    SearchExhausted,
)

DEFAULT_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TubeSet:
    """Tube lengths (mm) and optional sensor margins (mm), outermost first."""

    lengths: tuple[float, ...]
    margins: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        lengths = tuple(float(x) for x in self.lengths)
        margins = tuple(float(x) for x in self.margins) or (0.0,) * len(lengths)
        if len(lengths) < 1:
            raise ValueError("need at least one tube")
        if len(margins) != len(lengths):
            raise ValueError("margins and lengths differ in size")
        if lengths[0] <= 0 or any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise NonIncreasingLengths(f"lengths must satisfy 0 < L_1 < ... < L_N, got {lengths}")
        if any(m < 0 for m in margins):
            raise ValueError("margins must be non-negative")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "margins", margins)
        if self.effective_lengths[0] <= 0:
            raise NonPositiveEffectiveLength(
                f"L_1 - sum(margins) = {self.effective_lengths[0]:g} mm is not positive"
            )

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def effective_lengths(self) -> tuple[float, ...]:
        """``L_i* = L_i - sum_{k >= i} m_k``; margins restrict recursively from the inside."""
        tail = np.cumsum(self.margins[::-1])[::-1]
        return tuple(float(L - t) for L, t in zip(self.lengths, tail))

    def lengths_used(self, use_margins: bool) -> np.ndarray:
        return np.array(self.effective_lengths if use_margins else self.lengths)


@dataclass(frozen=True, eq=False)
class BetaTransform:
    tubes: TubeSet
    matrix: np.ndarray
    inverse: np.ndarray
    determinant: float
    uses_margins: bool = False
    lengths: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.tubes.n


@dataclass(frozen=True, eq=False)
class ConstraintReport:
    """Slacks of both inequality chains; negative slack means violation.

    ``slack_order[i] = beta_{i-1} - beta_i`` and
    ``slack_length[i] = (L_i + beta_i) - (L_{i-1} + beta_{i-1})`` with
    ``beta_0 = L_0 = 0`` (0-based arrays, entry 0 is tube 1).
    """

    valid: bool
    slack_order: np.ndarray
    slack_length: np.ndarray
    worst_violation: float
    tol: float

    @property
    def min_slack(self) -> float:
        return float(min(self.slack_order.min(), self.slack_length.min()))

    def violated(self) -> list[tuple[int, int]]:
        """``(chain, tube)`` pairs (1-based) whose slack is below ``-tol``."""
        out = []
        for chain, s in ((1, self.slack_order), (2, self.slack_length)):
            out.extend((chain, int(i) + 1) for i in np.flatnonzero(s < -self.tol))
        return out


def _transform_matrix(L: np.ndarray) -> np.ndarray:
    steps = -np.diff(L, prepend=0.0)  # -L_1, L_1 - L_2, ..., L_{N-1} - L_N
    return np.tril(np.broadcast_to(steps, (len(L), len(L))))


def _closed_form_inverse(L: np.ndarray) -> np.ndarray:
    n = len(L)
    inv = np.zeros((n, n))
    widths = np.diff(L, prepend=0.0)
    inv[np.arange(n), np.arange(n)] = -1.0 / widths
    inv[np.arange(1, n), np.arange(n - 1)] = 1.0 / widths[1:]
    return inv


def _closed_form_det(L: np.ndarray) -> float:
    return float((-1) ** len(L) * np.prod(np.diff(L, prepend=0.0)))


def build_beta_transform(tubes: TubeSet, use_margins: bool = False) -> BetaTransform:
    L = tubes.lengths_used(use_margins)
    if np.any(np.diff(L, prepend=0.0) <= 0):
        raise NonIncreasingLengths(f"effective lengths not increasing: {L}")
    return BetaTransform(
        tubes=tubes,
        matrix=_frozen(_transform_matrix(L)),
        inverse=_frozen(_closed_form_inverse(L)),
        determinant=_closed_form_det(L),
        uses_margins=use_margins,
        lengths=_frozen(L),
    )


def inverse_beta_transform(t: BetaTransform) -> np.ndarray:
    return _closed_form_inverse(t.lengths)


def _as_unit(u, lo: float, tol: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u < lo - tol) or np.any(u > 1.0 + tol):
        raise OutOfRangeInput(f"entries must lie in [{lo:g}, 1]")
    return u


def _lengths_of(tubes) -> np.ndarray:
    if isinstance(tubes, BetaTransform):
        return tubes.lengths
    if isinstance(tubes, TubeSet):
        return np.array(tubes.lengths)
    return np.asarray(tubes, dtype=float)


def unit_to_beta(t: BetaTransform, u, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Map unit coordinates (shape ``(N,)`` or ``(N, S)``) to translations."""
    return t.matrix @ _as_unit(u, 0.0, tol)


def beta_to_unit(t: BetaTransform, beta, tol: float = DEFAULT_TOL) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if not np.all(feasible_mask(t.lengths, beta, tol)):
        raise InvalidBeta("translation violates the nesting inequalities")
    return t.inverse @ beta


def sym_to_beta(t: BetaTransform, s, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``beta = M (s + 1) / 2`` for ``s`` in ``[-1, 1]^N``."""
    s = _as_unit(s, -1.0, tol)
    return 0.5 * (t.matrix @ (s + 1.0))


def beta_to_sym(t: BetaTransform, beta, tol: float = DEFAULT_TOL) -> np.ndarray:
    return 2.0 * beta_to_unit(t, beta, tol) - 1.0


def constraint_slacks(lengths, beta) -> tuple[np.ndarray, np.ndarray]:
    """Slacks of both chains for ``beta`` of shape ``(N,)`` or ``(N, S)``."""
    L = _lengths_of(lengths)
    beta = np.asarray(beta, dtype=float)
    shape = (1,) + beta.shape[1:]
    prev = np.concatenate([np.zeros(shape), beta[:-1]])
    ends = beta + L.reshape((-1,) + (1,) * (beta.ndim - 1))
    prev_ends = np.concatenate([np.zeros(shape), ends[:-1]])
    return prev - beta, ends - prev_ends


def feasible_mask(lengths, beta, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-sample validity for ``beta`` of shape ``(N,)`` (scalar) or ``(N, S)``."""
    s1, s2 = constraint_slacks(lengths, beta)
    return (s1 >= -tol).all(axis=0) & (s2 >= -tol).all(axis=0)


def check_constraints(tubes, beta, tol: float = DEFAULT_TOL, use_margins: bool = False) -> ConstraintReport:
    if isinstance(tubes, TubeSet):
        L = tubes.lengths_used(use_margins)
    else:
        L = _lengths_of(tubes)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != L.shape:
        raise ValueError(f"expected {L.shape[0]} translations, got shape {beta.shape}")
    s1, s2 = constraint_slacks(L, beta)
    worst = max(0.0, -float(min(s1.min(), s2.min())))
    return ConstraintReport(
        valid=bool(worst <= tol),
        slack_order=s1,
        slack_length=s2,
        worst_violation=worst,
        tol=tol,
    )


def descending_pattern(lengths, u: np.ndarray) -> np.ndarray:
    """Inner-tube-first construction ``beta_N = -L_N u_N``,
    ``beta_i = beta_{i+1} + (L_{i+1} - L_i) u_i``.  Not a valid map."""
    L = _lengths_of(lengths)
    u = np.asarray(u, dtype=float)
    beta = np.empty_like(u)
    beta[-1] = -L[-1] * u[-1]
    for i in range(len(L) - 2, -1, -1):
        beta[i] = beta[i + 1] + (L[i + 1] - L[i]) * u[i]
    return beta


def ascending_pattern(lengths, u: np.ndarray) -> np.ndarray:
    """Outer-tube-first construction; equals ``M @ u`` written as a recurrence."""
    L = _lengths_of(lengths)
    u = np.asarray(u, dtype=float)
    beta = np.empty_like(u)
    prev_b, prev_L = 0.0, 0.0
    for i in range(len(L)):
        beta[i] = prev_b + (prev_L - L[i]) * u[i]
        prev_b, prev_L = beta[i], L[i]
    return beta


def count_pattern_violations(lengths, pattern: str, draws: int, seed: int = 0,
                             chunk: int = 200_000, tol: float = 0.0) -> int:
    """Number of draws (out of ``draws``) whose pattern output violates the order chain."""
    build = {"ascending": ascending_pattern, "descending": descending_pattern}[pattern]
    L = _lengths_of(lengths)
    bad = 0
    for start in range(0, draws, chunk):
        u = rng.uniform_block(seed, start, min(chunk, draws - start), len(L))
        s1, _ = constraint_slacks(L, build(L, u))
        bad += int(np.count_nonzero((s1 < -tol).any(axis=0)))
    return bad


def descending_pattern_counterexample(tubes, seed: int = 0, budget: int = 1_000_000,
                                      chunk: int = 100_000) -> tuple[np.ndarray, np.ndarray]:
    """First random draw for which the inner-first pattern breaks ``0 >= beta_1 >= ...``.

    Returns ``(u, beta)``.  Raises :class:`SearchExhausted` after ``budget`` draws.
    """
    L = _lengths_of(tubes)
    if len(L) < 2:
        raise ValueError("need at least two tubes")
    for start in range(0, budget, chunk):
        u = rng.uniform_block(seed, start, min(chunk, budget - start), len(L))
        beta = descending_pattern(L, u)
        s1, _ = constraint_slacks(L, beta)
        hits = np.flatnonzero((s1 < 0).any(axis=0))
        if hits.size:
            k = hits[0]
            return u[:, k].copy(), beta[:, k].copy()
    raise SearchExhausted(f"no violation in {budget} draws")


def vertex_images(t: BetaTransform) -> np.ndarray:
    """Images of all ``2^N`` unit-cube corners, shape ``(N, 2^N)``."""
    n = t.n
    corners = (np.arange(2 ** n)[None, :] >> np.arange(n)[:, None]) & 1
    return t.matrix @ corners.astype(float)


def as_tubes(lengths: Sequence[float] | TubeSet, margins: Sequence[float] = ()) -> TubeSet:
    return lengths if isinstance(lengths, TubeSet) else TubeSet(tuple(lengths), tuple(margins))
