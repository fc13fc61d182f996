"""Kernel backend selection: compiled Cython core if importable, else pure Python."""

from __future__ import annotations

import os
from types import ModuleType

from . import _pyfallback


def _load_compiled() -> ModuleType | None:
    try:
        from . import _core
    except ImportError:
        return None
    return _core


compiled = _load_compiled()
python = _pyfallback

if os.environ.get("BETASPACE_PURE_PYTHON", "") not in ("", "0") or compiled is None:
    kernels: ModuleType = _pyfallback
else:
    kernels = compiled

NAME = kernels.BACKEND


def get(name: str | None = None) -> ModuleType:
    """Kernel module by name (``"compiled"``, ``"python"``) or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pyfallback
    if name == "compiled":
        if compiled is None:
            raise ImportError("betaspace._core is not built")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
