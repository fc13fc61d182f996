"""Wall-clock comparison of the samplers.

Only the generation loop is timed (the ``wall_time`` of each sampler call);
statistics, validation and file output are outside the measured span.
"""

from __future__ import annotations

import math
import platform
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .sampling import MAX_ATTEMPTS, SamplerMethod, sample
from .transform import TubeSet

BENCH_METHODS = (
    SamplerMethod.REJECT_A, SamplerMethod.REJECT_B, SamplerMethod.REJECT_C, SamplerMethod.REJECT_D,
    SamplerMethod.DIRECT, SamplerMethod.DIRECT_BATCH,
)


@dataclass(frozen=True)
class BenchRow:
    method: str
    times_ms: tuple[float, ...]
    success_rate: float
    fail_rate: float
    factor: float = math.nan

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.times_ms))

    @property
    def std_ms(self) -> float:
        return float(np.std(self.times_ms, ddof=1)) if len(self.times_ms) > 1 else 0.0


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    count: int
    repeats: int
    seed: int
    backend: str
    metadata: dict = field(default_factory=dict)

    def row(self, method: SamplerMethod | str) -> BenchRow:
        name = SamplerMethod(method).value
        return next(r for r in self.rows if r.method == name)

    def as_dict(self) -> dict:
        def num(x):
            return None if math.isnan(x) else x

        return {
            "count": self.count,
            "repeats": self.repeats,
            "seed": self.seed,
            "backend": self.backend,
            "environment": self.metadata,
            "rows": [
                {"method": r.method, "mean_ms": r.mean_ms, "std_ms": r.std_ms, "factor": r.factor,
                 "success_rate": num(r.success_rate), "fail_rate": num(r.fail_rate),
                 "times_ms": list(r.times_ms)}
                for r in self.rows
            ],
        }

    def table(self) -> str:
        lines = [f"{'method':<14}{'time [ms]':>22}{'factor':>10}{'success':>10}{'fail':>9}"]
        for r in self.rows:
            t = f"{r.mean_ms:.3f} +- {r.std_ms:.3f}"
            lines.append(f"{r.method:<14}{t:>22}{r.factor:>10.2f}{r.success_rate:>10.2%}{r.fail_rate:>9.2%}")
        return "\n".join(lines)


def run_bench(tubes: TubeSet, count: int = 1000, repeats: int = 5, seed: int = 0,
              max_attempts: int = MAX_ATTEMPTS, methods=BENCH_METHODS, *, threads: int = 1,
              backend: str | None = None, warmup: bool = True) -> BenchReport:
    """Run every method ``repeats`` times; repeat ``r`` uses seed ``seed + r``."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    methods = [SamplerMethod(m) for m in methods]
    if warmup:
        for m in methods:
            sample(tubes, m, min(count, 100), seed, max_attempts=max_attempts, threads=threads, backend=backend)

    raw = []
    for m in methods:
        times, succeeded, failed, draws = [], 0, 0, 0
        for r in range(repeats):
            _, st = sample(tubes, m, count, seed + r, max_attempts=max_attempts, threads=threads, backend=backend)
            times.append(st.wall_time * 1e3)
            succeeded += st.succeeded
            failed += st.failed
            draws += st.raw_draws
        success = succeeded / draws if draws else math.nan
        fail = failed / succeeded if succeeded else (math.inf if failed else math.nan)
        raw.append(BenchRow(m.value, tuple(times), success, fail))

    ref = next((r.mean_ms for r in raw if r.method == SamplerMethod.DIRECT.value), math.nan)
    rows = tuple(BenchRow(r.method, r.times_ms, r.success_rate, r.fail_rate, r.mean_ms / ref) for r in raw)
    meta = {"python": platform.python_version(), "machine": platform.machine(),
            "numpy": np.__version__, "threads": threads}
    return BenchReport(rows, count, repeats, seed, _backend.get(backend).BACKEND, meta)
