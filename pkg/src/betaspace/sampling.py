"""Joint-space samplers for the translation variables.

Four rejection samplers draw ``beta = -L * u`` and redraw until the nesting
inequalities hold; the direct samplers map ``u`` through the triangular matrix
and never reject.  All draws come from the counter-based generator in
:mod:`betaspace.rng`, one stream per requested sample, so results depend only
on ``(seed, sample index)``: sharding across threads does not change them and
the per-sample and batched direct samplers agree bit for bit.

Draw order per sample: counters ``0..N-1`` hold the first ``u_1..u_N``; every
redraw consumes the next counters for the non-pinned entries in index order.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from . import _backend
from .errors import UnsupportedMethod
from .transform import TubeSet, build_beta_transform

MAX_ATTEMPTS = 1000


class SamplerMethod(str, enum.Enum):
    REJECT_A = "reject_a"
    REJECT_B = "reject_b"
    REJECT_C = "reject_c"
    REJECT_D = "reject_d"
    DIRECT = "direct"
    DIRECT_BATCH = "direct_batch"

    @property
    def is_rejection(self) -> bool:
        return self.value.startswith("reject")

    @property
    def pinned(self) -> int:
        """0-based index held fixed across redraws, ``-1`` for none."""
        return {"reject_a": -1, "reject_b": 0, "reject_c": 1, "reject_d": 2}.get(self.value, -1)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``betas`` has shape ``(N, S)``; failed samples hold NaN and ``failed=True``."""

    betas: np.ndarray
    attempts: np.ndarray
    failed: np.ndarray
    seed: int
    method: SamplerMethod

    @property
    def count(self) -> int:
        return self.betas.shape[1]

    @property
    def accepted(self) -> np.ndarray:
        return self.betas[:, ~self.failed]


@dataclass(frozen=True)
class SamplingStats:
    requested: int
    succeeded: int
    failed: int
    raw_draws: int
    wall_time: float

    @property
    def success_rate(self) -> float:
        """Accepted candidate vectors over all candidate vectors drawn."""
        return self.succeeded / self.raw_draws if self.raw_draws else math.nan

    @property
    def fail_rate(self) -> float:
        """Samples that hit the attempt cap, relative to successful samples."""
        if self.requested == 0:
            return math.nan
        return self.failed / self.succeeded if self.succeeded else math.inf

    @property
    def throughput(self) -> float:
        return self.succeeded / self.wall_time if self.wall_time > 0 else math.inf


def _shards(count: int, threads: int) -> list[tuple[int, int]]:
    threads = max(1, min(threads, count)) if count else 1
    edges = np.linspace(0, count, threads + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:])]


def _run_sharded(fn, count: int, threads: int):
    shards = _shards(count, threads)
    if len(shards) == 1:
        return [fn(*shards[0])]
    with ThreadPoolExecutor(max_workers=len(shards)) as pool:
        return list(pool.map(lambda s: fn(*s), shards))


def _check_count(count: int) -> int:
    count = int(count)
    if count < 0:
        raise ValueError("count must be non-negative")
    return count


def sample_rejection(tubes: TubeSet, method: SamplerMethod | str, count: int, seed: int = 0,
                     max_attempts: int = MAX_ATTEMPTS, *, sqrt_transform: bool = False, use_margins: bool = False,
                     threads: int = 1, backend: str | None = None) -> tuple[SampleBatch, SamplingStats]:
    method = SamplerMethod(method)
    if not method.is_rejection:
        raise UnsupportedMethod(f"{method.value} is not a rejection method")
    if method.pinned >= 0 and tubes.n != 3:
        raise UnsupportedMethod(f"{method.value} is defined for three tubes only, got {tubes.n}")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    count = _check_count(count)
    kernels = _backend.get(backend)
    L = np.ascontiguousarray(tubes.lengths_used(use_margins), dtype=float)

    t0 = time.perf_counter()
    parts = _run_sharded(
        lambda start, n: kernels.reject(L, method.pinned, seed, start, n, max_attempts, sqrt_transform),
        count, threads,
    )
    betas = np.concatenate([p[0] for p in parts], axis=1)
    attempts = np.concatenate([p[1] for p in parts])
    failed = np.concatenate([p[2] for p in parts])
    wall = time.perf_counter() - t0

    n_failed = int(failed.sum())
    stats = SamplingStats(count, count - n_failed, n_failed, int(attempts.sum()), wall)
    return SampleBatch(betas, attempts, failed, seed, method), stats


def _direct(kernel_name: str, method: SamplerMethod, tubes: TubeSet, count: int, seed: int,
            sqrt_transform: bool, use_margins: bool, threads: int, backend: str | None):
    count = _check_count(count)
    M = np.ascontiguousarray(build_beta_transform(tubes, use_margins).matrix)
    kernel = getattr(_backend.get(backend), kernel_name)
    t0 = time.perf_counter()
    parts = _run_sharded(lambda start, n: kernel(M, seed, start, n, sqrt_transform), count, threads)
    betas = np.concatenate(parts, axis=1)
    wall = time.perf_counter() - t0
    batch = SampleBatch(betas, np.ones(count, dtype=np.int64), np.zeros(count, dtype=bool), seed, method)
    return batch, SamplingStats(count, count, 0, count, wall)


def sample_direct(tubes: TubeSet, count: int, seed: int = 0, sqrt_transform: bool = False, *,
                  use_margins: bool = False, threads: int = 1,
                  backend: str | None = None) -> tuple[SampleBatch, SamplingStats]:
    """Per-sample loop ``beta = M u``; with ``sqrt_transform`` each ``u_i = sqrt(v_i)``."""
    return _direct("direct_loop", SamplerMethod.DIRECT, tubes, count, seed, sqrt_transform,
                   use_margins, threads, backend)


def sample_direct_batch(tubes: TubeSet, count: int, seed: int = 0, sqrt_transform: bool = False, *,
                        use_margins: bool = False, threads: int = 1,
                        backend: str | None = None) -> tuple[SampleBatch, SamplingStats]:
    """Same output as :func:`sample_direct`, computed as one ``M @ U`` product."""
    return _direct("direct_batch", SamplerMethod.DIRECT_BATCH, tubes, count, seed, sqrt_transform,
                   use_margins, threads, backend)


def sample(tubes: TubeSet, method: SamplerMethod | str, count: int, seed: int = 0, *,
           sqrt_transform: bool = False, max_attempts: int = MAX_ATTEMPTS, use_margins: bool = False,
           threads: int = 1, backend: str | None = None) -> tuple[SampleBatch, SamplingStats]:
    method = SamplerMethod(method)
    if method.is_rejection:
        return sample_rejection(tubes, method, count, seed, max_attempts, sqrt_transform=sqrt_transform,
                                use_margins=use_margins, threads=threads, backend=backend)
    fn = sample_direct if method is SamplerMethod.DIRECT else sample_direct_batch
    return fn(tubes, count, seed, sqrt_transform, use_margins=use_margins, threads=threads, backend=backend)


def theoretical_success_rate(tubes: TubeSet, use_margins: bool = False) -> float:
    """Acceptance probability of full redraw sampling: feasible volume over box volume."""
    L = tubes.lengths_used(use_margins)
    return float(np.prod(1.0 - L[:-1] / L[1:]))


def _component_masses(width: float, h: float, sqrt_transform: bool) -> tuple[float, np.ndarray]:
    """Bin masses of ``-width * u`` on a grid of step ``h`` starting at ``-width``."""
    nb = int(math.ceil(width / h - 1e-12))
    edges = np.minimum(-width + h * np.arange(nb + 1), 0.0)
    t = (edges + width) / width  # fraction of the way from -width to 0
    cdf = 1.0 - (1.0 - t) ** 2 if sqrt_transform else t
    return -width + 0.5 * h, np.diff(cdf)


def marginal_cdf_oracle(tubes: TubeSet, i: int, x, resolution: float = 0.05,
                        sqrt_transform: bool = False, use_margins: bool = False):
    """CDF of ``beta_i`` (1-based ``i``) under direct sampling, by numerical convolution.

    ``beta_i`` is a sum of independent scaled uniforms with widths
    ``L_1, L_2 - L_1, ..., L_i - L_{i-1}`` (negated).  Each component is binned
    on a common grid of step ``resolution`` mm and the masses are convolved.
    """
    L = tubes.lengths_used(use_margins)
    if not 1 <= i <= len(L):
        raise IndexError(f"tube index {i} outside 1..{len(L)}")
    widths = np.diff(L[:i], prepend=0.0)
    offset, mass = 0.0, np.array([1.0])
    for w in widths:
        o, m = _component_masses(float(w), resolution, sqrt_transform)
        offset += o
        mass = fftconvolve(mass, m)
    mass = np.clip(mass, 0.0, None)
    mass /= mass.sum()
    # piecewise-linear CDF: each mass spread uniformly over its bin
    knots = offset - 0.5 * resolution + resolution * np.arange(mass.size + 1)
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    out = np.interp(np.asarray(x, dtype=float), knots, cdf, left=0.0, right=1.0)
    return float(out) if np.ndim(out) == 0 else out


def write_batch_csv(batch: SampleBatch, path: str | Path) -> None:
    n = batch.betas.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id"] + [f"beta_{i + 1}" for i in range(n)] + ["attempts", "failed"])
        for k in range(batch.count):
            w.writerow([k] + [repr(float(b)) for b in batch.betas[:, k]]
                       + [int(batch.attempts[k]), int(batch.failed[k])])


def stats_record(batch: SampleBatch, stats: SamplingStats, **extra) -> dict:
    def num(x: float):
        return None if math.isnan(x) else (x if math.isfinite(x) else str(x))

    rec = {
        "method": batch.method.value,
        "seed": batch.seed,
        "requested": stats.requested,
        "succeeded": stats.succeeded,
        "failed": stats.failed,
        "raw_draws": stats.raw_draws,
        "success_rate": num(stats.success_rate),
        "fail_rate": num(stats.fail_rate),
        "wall_time_s": stats.wall_time,
    }
    rec.update(extra)
    return rec


def write_stats_json(record: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
