"""Numba switch.

Hot kernels come in two flavours: an ``@njit`` loop version and a
vectorised numpy version.  ``L0STABLE_NUMBA=0`` selects the numpy path;
missing numba does the same silently.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("L0STABLE_NUMBA", "1") not in ("0", "false", "no")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    if args and callable(args[0]):
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)


def set_threads(n):
    """Cap the numba thread pool (no-op on the numpy path)."""
    if n and numba is not None:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def threads_from_env():
    value = os.environ.get("STABLE_THREADS")
    return int(value) if value else None
