"""Backend selection for the boosted-tree hot kernels.

The compiled Cython backend is preferred when importable; the numpy
backend is always available. Override with SONOTAG_BACKEND=python or
set_backend() (the benchmark suite flips between the two).
"""

from __future__ import annotations

import os
import warnings

from . import _gbdt_py

_BACKENDS = {"python": _gbdt_py}

try:
    from . import _gbdt_cy

    _BACKENDS["cython"] = _gbdt_cy
except ImportError:  # extension not built; numpy fallback still works
    _gbdt_cy = None

_DEFAULT = "cython" if "cython" in _BACKENDS else "python"
_requested = os.environ.get("SONOTAG_BACKEND", _DEFAULT)
if _requested not in _BACKENDS:
    warnings.warn(f"backend {_requested!r} unavailable; using {_DEFAULT!r}", RuntimeWarning)
    _requested = _DEFAULT
_active = _requested


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend():
    return _BACKENDS[_active]


def backend_name() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name
