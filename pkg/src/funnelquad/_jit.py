"""Optional numba acceleration.

Kernels are written once in a numba-compatible subset of Python.  When numba
is missing, or ``FUNNELQUAD_DISABLE_JIT`` is set to a truthy value, ``njit``
returns the function untouched and the same source runs as plain Python.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("FUNNELQUAD_DISABLE_JIT", "").strip().lower()
JIT_ENABLED = numba is not None and _flag not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    if JIT_ENABLED:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("error_model", "numpy")
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
