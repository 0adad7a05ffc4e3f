"""Optional numba acceleration.

Set ``TTKINETIC_NUMBA=0`` in the environment before import to force the
pure-numpy code paths (useful for debugging and for the benchmark).
"""
import os

_flag = os.environ.get("TTKINETIC_NUMBA", "1").strip().lower()
_requested = _flag not in ("0", "false", "no", "off")

try:
    if not _requested:
        raise ImportError
    from numba import njit as _njit, prange

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    prange = range


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
