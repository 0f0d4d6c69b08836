"""Backend switch for the numeric kernels.

Kernels are written once in a numba-compatible subset of numpy.  When numba is
importable and ``QRLSIM_BACKEND`` is not ``numpy``, they are compiled with
``numba.njit``; otherwise the same functions run as plain Python/numpy.
"""
import os

_requested = os.environ.get("QRLSIM_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"QRLSIM_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

BACKEND = "numba" if (_requested == "numba" and numba is not None) else "numpy"


def jit(func):
    """Compile ``func`` with numba when the numba backend is active."""
    if BACKEND == "numba":
        return numba.njit(cache=True, nogil=True)(func)
    return func


def python_impl(func):
    """Return the uncompiled Python body of a (possibly) jitted kernel."""
    return getattr(func, "py_func", func)
