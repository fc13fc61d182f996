"""Compiled kernels versus the pure-Python fallback.

Run from the repository root after an in-place build::

    python3 benchmarks/bench_backends.py --count 20000 --repeats 3

Both backends share the counter-based stream, so each pair of outputs is also
checked for equality before the timings are reported.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from betaspace import _backend
from betaspace.transform import TubeSet, build_beta_transform

L = TubeSet((100.0, 150.0, 200.0))


def _cases(count: int):
    M = np.ascontiguousarray(build_beta_transform(L).matrix)
    lengths = np.asarray(L.lengths, dtype=float)
    pts = np.random.default_rng(0).random((min(count, 2000), 2))
    half = len(pts) // 2
    a, b = np.ascontiguousarray(pts[:half]), np.ascontiguousarray(pts[half:])
    return {
        "direct_loop": lambda k: k.direct_loop(M, 0, 0, count, False),
        "direct_batch": lambda k: k.direct_batch(M, 0, 0, count, False),
        "reject_a": lambda k: k.reject(lengths, -1, 0, 0, count // 10, 1000, False),
        "reject_b": lambda k: k.reject(lengths, 0, 0, 0, count // 10, 1000, False),
        "pair_moments": lambda k: k.pair_moments(a, b, False),
    }


def _best(fn, kernels, repeats: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(kernels)
        best = min(best, time.perf_counter() - t0)
    return best * 1e3, out


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    if isinstance(x, np.ndarray):
        return np.allclose(x, y, rtol=1e-12, atol=0, equal_nan=True)
    return np.isclose(x, y, rtol=1e-12, atol=0)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--count", type=int, default=20_000)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)

    if _backend.compiled is None:
        print("compiled extension not built; run: pip install -e . --no-build-isolation", file=sys.stderr)
        return 1

    print(f"{'kernel':<14}{'compiled ms':>13}{'python ms':>12}{'speedup':>10}  match")
    for name, fn in _cases(args.count).items():
        tc, oc = _best(fn, _backend.compiled, args.repeats)
        tp, op = _best(fn, _backend.python, args.repeats)
        print(f"{name:<14}{tc:>13.3f}{tp:>12.1f}{tp / tc:>9.0f}x  {_same(oc, op)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
