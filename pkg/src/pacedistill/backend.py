"""Kernel backend selection.

The compiled extension is used when importable; otherwise the NumPy
fallback. PACEDISTILL_BACKEND=python|compiled forces the choice at import
time, and `use()` rebinds it in-process (the benchmark relies on that to
time both).
"""

import os

from . import _kernels_py

_backends = {"python": _kernels_py}
try:
    from . import _kernels_cy

    _backends["compiled"] = _kernels_cy
except ImportError:
    pass


def _select_default():
    requested = os.environ.get("PACEDISTILL_BACKEND", "").strip().lower()
    if requested:
        if requested not in _backends:
            raise ImportError(
                f"PACEDISTILL_BACKEND={requested!r} is not available; "
                f"options: {sorted(_backends)}"
            )
        return _backends[requested]
    return _backends.get("compiled", _kernels_py)


_active = _select_default()


def available():
    """Names of the importable backends."""
    return sorted(_backends)


def active_name():
    """Name of the backend currently in use."""
    return _active.BACKEND_NAME


def use(name):
    """Switch the active backend ('python' or 'compiled')."""
    global _active
    if name not in _backends:
        raise ValueError(f"unknown backend {name!r}; options: {sorted(_backends)}")
    _active = _backends[name]


def get(name):
    """Return a backend module by name without activating it."""
    if name not in _backends:
        raise ValueError(f"unknown backend {name!r}; options: {sorted(_backends)}")
    return _backends[name]


def affine(x, w, b):
    return _active.affine(x, w, b)


def matmul_at_b(a, b):
    return _active.matmul_at_b(a, b)


def matmul_a_bt(a, b):
    return _active.matmul_a_bt(a, b)
