"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and ``APAMOEBA_NUMBA`` is not set to
``0``/``false``/``off``. Both paths expose the same functions.
"""
import os

from . import _numpy_impl as numpy_backend

_flag = os.environ.get("APAMOEBA_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

numba_backend = None
if _want_numba:
    try:
        from . import _numba_impl as numba_backend
    except ImportError:  # numba missing or broken
        numba_backend = None

_active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if _active is numba_backend else "numpy"

fiber_search = _active.fiber_search
log_abs_means = _active.log_abs_means
track_argument = _active.track_argument
kronecker_scan = _active.kronecker_scan

__all__ = [
    "BACKEND",
    "fiber_search",
    "log_abs_means",
    "track_argument",
    "kronecker_scan",
    "numpy_backend",
    "numba_backend",
]
