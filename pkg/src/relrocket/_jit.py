"""Optional numba acceleration for the numeric kernels.

Kernels are written in the numba-compatible subset of Python. When numba is
importable and ``RELROCKET_DISABLE_NUMBA`` is unset (or false-y) they are
compiled with ``njit``; otherwise the very same functions run as plain Python.
The flag is read once, at import time.
"""

import os

_FLAG = os.environ.get("RELROCKET_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG in {"1", "true", "yes", "on"}

try:
    if DISABLED_BY_ENV:
        raise ImportError("numba disabled by RELROCKET_DISABLE_NUMBA")
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(func)
    return func


def python_impl(func):
    """Return the uncompiled Python function behind a kernel."""
    return getattr(func, "py_func", func)
