"""Tip-position models for workspace studies.

Two toy generators (square, disk), a planar constant-curvature segment, and a
torsionally rigid dominating-stiffness model of a concentric tube robot.  In
the latter, every arc-length interval between consecutive breakpoints (tube
ends and straight/curved transitions) bends with the stiffness-weighted mean of
the precurvature vectors of the tubes present there, each rotated by its
tube's base angle ``alpha_i``.  The tip follows from composing circular arcs.

Arc length ``s`` is measured from the constraint plane at the base; tube ``i``
occupies ``[beta_i, L_i + beta_i]`` and its curved part starts at
``beta_i + length_straight``.  Only ``s >= 0`` is part of the manipulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .errors import InvalidConfiguration
from .transform import DEFAULT_TOL, TubeSet, build_beta_transform, feasible_mask

SERIES_THRESHOLD = 1e-6


@dataclass(frozen=True)
class PlanarCCSegment:
    length: float
    curvature: float


def _arc_terms(kappa: np.ndarray, ell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(1 - cos(k l)) / k`` and ``sin(k l) / k`` with a series branch near ``k l = 0``.

    The lateral term is evaluated as ``2 sin^2(k l / 2) / k``, which avoids the
    cancellation in ``1 - cos`` just above the series threshold.
    """
    kappa = np.asarray(kappa, dtype=float)
    ell = np.asarray(ell, dtype=float)
    theta = kappa * ell
    small = np.abs(theta) < SERIES_THRESHOLD
    safe = np.where(small, 1.0, kappa)
    lateral = np.where(small, kappa * ell**2 / 2 - kappa**3 * ell**4 / 24, 2 * np.sin(theta / 2) ** 2 / safe)
    axial = np.where(small, ell - kappa**2 * ell**3 / 6, np.sin(theta) / safe)
    return lateral, axial


def cc_planar_tip(seg: PlanarCCSegment) -> np.ndarray:
    if seg.length < 0:
        raise ValueError("segment length must be non-negative")
    lateral, axial = _arc_terms(seg.curvature, seg.length)
    return np.array([float(lateral), float(axial)])


def cc_planar_tips(lengths, curvatures) -> np.ndarray:
    lateral, axial = _arc_terms(curvatures, lengths)
    return np.stack([lateral, axial], axis=-1)


def toy_square_points(count: int, seed: int = 0) -> np.ndarray:
    return rng.uniform_block(seed, 0, count, 2).T


def toy_disk_points(count: int, seed: int = 0, sqrt_transform: bool = False, radius: float = 1.0) -> np.ndarray:
    u = rng.uniform_block(seed, 0, count, 2)
    r = radius * (np.sqrt(u[0]) if sqrt_transform else u[0])
    theta = 2 * np.pi * u[1]
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def cc_toy_points(count: int, seed: int = 0, sqrt_transform: bool = False, length: float = 100.0,
                  max_curvature: float = np.pi / 100.0) -> np.ndarray:
    """Planar single-segment robot with a translated base.

    The segment behaves like a one-tube robot: ``beta = -length * u`` (``u`` or
    ``sqrt(v)``), deployed length ``length + beta``; curvature is uniform in
    ``[-max_curvature, max_curvature]``.
    """
    u = rng.uniform_block(seed, 0, count, 2)
    unit = np.sqrt(u[0]) if sqrt_transform else u[0]
    ell = length + build_beta_transform(TubeSet((length,))).matrix[0, 0] * unit
    kappa = max_curvature * (2 * u[1] - 1)
    return cc_planar_tips(ell, kappa)


@dataclass(frozen=True)
class TubeSpec:
    length_straight: float
    length_curved: float
    precurvature: float
    stiffness: float
    margin: float = 0.0

    @property
    def length(self) -> float:
        return self.length_straight + self.length_curved


@dataclass(frozen=True)
class CTCRModel:
    """Tubes ordered outermost first."""

    tubes: tuple[TubeSpec, ...]
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "tubes", tuple(self.tubes))
        for t in self.tubes:
            if t.length_straight < 0 or t.length_curved < 0:
                raise ValueError("tube section lengths must be non-negative")
            if t.stiffness <= 0:
                raise ValueError("stiffness weights must be positive")
        self.tubeset  # validates ordering

    @property
    def n(self) -> int:
        return len(self.tubes)

    @property
    def tubeset(self) -> TubeSet:
        return TubeSet(tuple(t.length for t in self.tubes), tuple(t.margin for t in self.tubes))

    def _arrays(self):
        L = np.array([t.length for t in self.tubes])
        straight = np.array([t.length_straight for t in self.tubes])
        kappa = np.array([t.precurvature for t in self.tubes])
        stiff = np.array([t.stiffness for t in self.tubes])
        return L, straight, kappa, stiff


@dataclass(frozen=True)
class Configuration:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]


def _rot_z(phi: np.ndarray) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    z, o = np.zeros_like(phi), np.ones_like(phi)
    return np.stack([np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2)


def _rot_y(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    z, o = np.zeros_like(theta), np.ones_like(theta)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def segment_curvatures(model: CTCRModel, alphas: np.ndarray, betas: np.ndarray):
    """Breakpoint-delimited segments of every configuration.

    ``alphas``/``betas`` have shape ``(N, S)``.  Returns segment lengths and
    body-frame curvature components ``kx, ky``, each of shape ``(2N, S)``.
    """
    L, straight, kappa, stiff = model._arrays()
    col = (slice(None), None)
    ends = L[col] + betas
    total = ends.max(axis=0)
    transitions = np.clip(betas + straight[col], 0.0, None)
    cuts = np.sort(np.concatenate([np.zeros((1, betas.shape[1])), np.minimum(transitions, total), ends]), axis=0)
    cuts = np.clip(cuts, 0.0, total)
    ds = np.diff(cuts, axis=0)
    mid = 0.5 * (cuts[1:] + cuts[:-1])  # (2N, S)

    present = mid[None] < ends[:, None, :]  # (N, 2N, S)
    curved = present & (mid[None] >= (betas + straight[col])[:, None, :])
    weight = stiff[:, None, None] * present
    total_w = np.maximum(weight.sum(axis=0), np.finfo(float).tiny)
    k = (stiff * kappa)[:, None, None] * curved
    kx = (k * np.cos(alphas)[:, None, :]).sum(axis=0) / total_w
    ky = (k * np.sin(alphas)[:, None, :]).sum(axis=0) / total_w
    return ds, kx, ky


def ctcr_tips(model: CTCRModel, alphas, betas, check: bool = True, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Tip positions for configurations given as ``(N, S)`` arrays; returns ``(S, 3)``."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float).T).T
    betas = np.atleast_2d(np.asarray(betas, dtype=float).T).T
    if betas.shape[0] != model.n or alphas.shape != betas.shape:
        raise ValueError(f"expected ({model.n}, S) arrays, got {alphas.shape} and {betas.shape}")
    if check:
        ok = feasible_mask(model.tubeset, betas, tol)
        if not np.all(ok):
            raise InvalidConfiguration(f"{int((~ok).sum())} configuration(s) violate the nesting inequalities")

    ds, kx, ky = segment_curvatures(model, alphas, betas)
    S = betas.shape[1]
    pos = np.zeros((S, 3))
    rot = np.broadcast_to(np.eye(3), (S, 3, 3)).copy()
    for seg in range(ds.shape[0]):
        k = np.hypot(kx[seg], ky[seg])
        phi = np.arctan2(ky[seg], kx[seg])
        lateral, axial = _arc_terms(k, ds[seg])
        local = np.stack([lateral * np.cos(phi), lateral * np.sin(phi), axial], axis=-1)
        rz = _rot_z(phi)
        seg_rot = rz @ _rot_y(k * ds[seg]) @ np.swapaxes(rz, -1, -2)
        pos += np.einsum("sij,sj->si", rot, local)
        rot = rot @ seg_rot
    return pos


def ctcr_tip(model: CTCRModel, q: Configuration, check: bool = True) -> np.ndarray:
    return ctcr_tips(model, np.array(q.alphas)[:, None], np.array(q.betas)[:, None], check)[0]


def sample_rotations(n: int, count: int, seed: int) -> np.ndarray:
    """Uniform rotations in ``[0, 2 pi)`` drawn from a stream independent of the translations."""
    return 2 * np.pi * rng.uniform_block(rng.derive_seed(seed, 1), 0, count, n)


def model_from_records(records: Sequence[dict], name: str = "") -> CTCRModel:
    return CTCRModel(tuple(TubeSpec(**r) for r in records), name)


def sample_tips(model: CTCRModel, count: int, seed: int = 0, sqrt_transform: bool = False,
                method: str = "direct", **sampler_kw) -> np.ndarray:
    """Tip positions ``(S', 3)`` of random configurations; failed rejection samples are dropped."""
    from .sampling import sample

    batch, _ = sample(model.tubeset, method, count, seed, sqrt_transform=sqrt_transform, **sampler_kw)
    ok = ~batch.failed
    alphas = sample_rotations(model.n, count, seed)[:, ok]
    return ctcr_tips(model, alphas, batch.betas[:, ok])
