"""Kernel backend selection.

Hot loops are compiled with numba when it is importable.  Set
``SLSPEC_DISABLE_NUMBA=1`` to force the pure-numpy path (useful for
debugging and for the backend benchmark).  ``SLSPEC_THREADS`` caps the
number of worker threads used by the parallel kernels and thread pools.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}

DISABLE_NUMBA = os.environ.get("SLSPEC_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

# TBB shipped with some images is too old for numba; OpenMP is always present.
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    if DISABLE_NUMBA:
        raise ImportError("numba disabled by SLSPEC_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


def thread_count():
    """Worker count from ``SLSPEC_THREADS`` (default: all CPUs)."""
    raw = os.environ.get("SLSPEC_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


if HAVE_NUMBA:
    try:
        numba.set_num_threads(min(thread_count(), numba.config.NUMBA_NUM_THREADS))
    except Exception:  # pragma: no cover - depends on threading layer
        pass

BACKEND = "numba" if HAVE_NUMBA else "numpy"
