"""Numba switch.

Hot loops are written twice: a ``@jit`` loop version and a vectorised numpy
version.  ``DEFAULTGAP_NUMBA=0`` (or a missing numba install) selects numpy.
"""
import functools
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("DEFAULTGAP_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

if HAVE_NUMBA:
    jit = functools.partial(numba.njit, cache=True, nogil=True)
else:  # pragma: no cover
    def jit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func


def backend():
    return "numba" if USE_NUMBA else "numpy"
