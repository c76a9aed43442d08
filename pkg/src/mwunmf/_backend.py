"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the NumPy
kernels in ``_pycore`` take over. Setting ``MWUNMF_BACKEND=python`` forces the
fallback (useful for comparing the two).
"""

import os

from . import _pycore

try:
    from . import _core
except ImportError:  # extension not built
    _core = None


def available():
    """Names of the backends importable in this environment."""
    return ["cython", "python"] if _core is not None else ["python"]


def get(name=None):
    if name is None:
        name = os.environ.get("MWUNMF_BACKEND", "").strip().lower() or None
    if name in (None, "auto"):
        return _core if _core is not None else _pycore
    if name == "python":
        return _pycore
    if name == "cython":
        if _core is None:
            raise ImportError("compiled core is not built; reinstall with Cython available")
        return _core
    raise ValueError(f"unknown backend {name!r}")


core = get()
