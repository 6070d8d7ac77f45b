"""Optional numba acceleration.

Hot kernels are written once in a numba-compatible subset of Python and
decorated with :func:`njit`.  When numba is missing, or the environment
variable ``PGW_DISABLE_NUMBA`` is set to a truthy value, :func:`njit` is the
identity and the kernels run as plain Python, with the vectorized numpy
helpers taking over wherever a kernel has one.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_ENABLED = (
    _numba is not None
    and os.environ.get("PGW_DISABLE_NUMBA", "").strip().lower() in _FALSY
)
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``, or a no-op when numba is disabled."""
    if not NUMBA_ENABLED:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def thread_cap():
    """Thread cap from ``PGW_NUM_THREADS``; None when unset or invalid."""
    raw = os.environ.get("PGW_NUM_THREADS", "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value >= 1 else None


def apply_thread_cap():
    """Cap numba and BLAS thread pools at ``PGW_NUM_THREADS``."""
    cap = thread_cap()
    if cap is None:
        return None
    if NUMBA_ENABLED:
        _numba.set_num_threads(min(cap, _numba.config.NUMBA_NUM_THREADS))
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return cap
    threadpool_limits(cap)
    return cap
