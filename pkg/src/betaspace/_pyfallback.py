"""Pure-Python twins of the kernels in ``_core.pyx``.

Same signatures, same draw addressing, same floating-point operation order, so
both backends return bit-identical arrays.  Used when the extension is not
built or when ``BETASPACE_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng

BACKEND = "python"


def direct_loop(M: np.ndarray, seed: int, start: int, count: int, sqrt_u: bool) -> np.ndarray:
    n = M.shape[0]
    rows = M.tolist()
    base = rng.base_key(seed)
    out = np.empty((n, count))
    mix, mask, gamma, gc = rng.mix64, rng.MASK64, rng.GAMMA, rng.GAMMA_COUNTER
    for k in range(count):
        key = mix((base + (start + k) * gamma) & mask)
        u = [(mix(key + (i + 1) * gc) >> 11) * rng.TO_UNIT for i in range(n)]
        if sqrt_u:
            u = [math.sqrt(x) for x in u]
        for i in range(n):
            acc = 0.0
            row = rows[i]
            for j in range(i + 1):
                acc = acc + row[j] * u[j]
            out[i, k] = acc
    return out


def uniform_fill(seed: int, start: int, count: int, n: int, sqrt_u: bool) -> np.ndarray:
    u = rng.uniform_block(seed, start, count, n)
    return np.sqrt(u) if sqrt_u else u


def direct_batch(M: np.ndarray, seed: int, start: int, count: int, sqrt_u: bool) -> np.ndarray:
    n = M.shape[0]
    u = uniform_fill(seed, start, count, n, sqrt_u)
    out = np.zeros((n, count))
    for i in range(n):
        for j in range(i + 1):
            out[i] = out[i] + M[i, j] * u[j]
    return out


def _feasible(b: list[float], L: list[float]) -> bool:
    prev_b = prev_end = 0.0
    for bi, Li in zip(b, L):
        if bi > prev_b:
            return False
        end = Li + bi
        if end < prev_end:
            return False
        prev_b, prev_end = bi, end
    return True


def reject(L: np.ndarray, pin: int, seed: int, start: int, count: int, max_attempts: int,
           sqrt_u: bool = False):
    n = len(L)
    Ls = [float(x) for x in L]
    base = rng.base_key(seed)
    out = np.empty((n, count))
    attempts = np.empty(count, dtype=np.int64)
    failed = np.zeros(count, dtype=bool)
    mix, mask, gamma, gc, scale = rng.mix64, rng.MASK64, rng.GAMMA, rng.GAMMA_COUNTER, rng.TO_UNIT
    redraw = [i for i in range(n) if i != pin]
    f = math.sqrt if sqrt_u else float
    for k in range(count):
        key = mix((base + (start + k) * gamma) & mask)
        b = [-Ls[i] * f((mix(key + (i + 1) * gc) >> 11) * scale) for i in range(n)]
        c = n
        tries = 1
        ok = _feasible(b, Ls)
        while not ok and tries < max_attempts:
            for i in redraw:
                c += 1
                b[i] = -Ls[i] * f((mix(key + c * gc) >> 11) * scale)
            tries += 1
            ok = _feasible(b, Ls)
        attempts[k] = tries
        if ok:
            out[:, k] = b
        else:
            failed[k] = True
            out[:, k] = np.nan
    return out, attempts, failed


def pair_moments(a: np.ndarray, b: np.ndarray, same: bool):
    d = np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1))
    if same:
        d = d[np.triu_indices(len(a), k=1)]
    return int(d.size), float(d.sum()), float((d * d).sum())
