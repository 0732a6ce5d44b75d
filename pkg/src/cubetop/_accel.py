"""Optional numba acceleration.

Kernels are written as plain Python on numpy arrays and wrapped with njit
when numba imports cleanly. The fallback runs the very same function objects,
so results are identical either way; only speed differs.
"""

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True

    def jit(func):
        return _njit(cache=True, nogil=True)(func)

except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def jit(func):
        return func
