"""Numba switch.

Set ``PIXELVEIL_DISABLE_NUMBA=1`` to force the pure-numpy kernels.
``PIXELVEIL_THREADS`` caps parallelism for numba and for the sweep pool.
"""
import os


def _env_threads():
    raw = os.environ.get("PIXELVEIL_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"PIXELVEIL_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise ValueError(f"PIXELVEIL_THREADS must be a positive integer, got {raw!r}")
    return n


THREADS = _env_threads()

# numba sizes its pool from NUMBA_NUM_THREADS at import time; it has to be at
# least as large as any later set_num_threads() call.
if THREADS is not None and "NUMBA_NUM_THREADS" not in os.environ:
    os.environ["NUMBA_NUM_THREADS"] = str(THREADS)

# skip numba's TBB probe (warns on old TBB); omp is thread-safe, workqueue is the fallback
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp workqueue tbb")

DISABLED = os.environ.get("PIXELVEIL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError("disabled by PIXELVEIL_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def set_threads(n=None):
    """Apply a thread cap to numba; returns the count actually in effect."""
    if n is None:
        n = THREADS
    if not HAS_NUMBA:
        return 1
    if n is not None:
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


def pool_size():
    """Worker count for coarse-grained (per-cell) parallelism."""
    return THREADS if THREADS is not None else (os.cpu_count() or 1)
