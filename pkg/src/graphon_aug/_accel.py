"""Numba switch.

Set ``GRAPHON_AUG_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. when
debugging or on platforms without numba.
"""

import os

_FLAG = os.environ.get("GRAPHON_AUG_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when available, otherwise return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
