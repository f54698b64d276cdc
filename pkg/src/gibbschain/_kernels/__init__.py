"""Backend selection for the hot numeric kernels.

The numba kernels are used when numba imports cleanly.  Set the
environment variable ``GIBBSCHAIN_NUMBA=0`` before import to force the
pure-numpy fallback (useful for debugging and for the backend benchmark);
``GIBBSCHAIN_NUMBA=1`` makes a numba import failure fatal instead of
falling back silently.
"""

import os

_flag = os.environ.get("GIBBSCHAIN_NUMBA", "auto").strip().lower()

if _flag in ("0", "off", "false", "no", "numpy"):
    from gibbschain._kernels import numpy_backend as _impl
else:
    try:
        from gibbschain._kernels import numba_backend as _impl
    except ImportError:
        if _flag in ("1", "on", "true", "yes", "numba"):
            raise
        from gibbschain._kernels import numpy_backend as _impl

BACKEND = _impl.NAME

sweep_row_final = _impl.sweep_row_final
sweep_col_final = _impl.sweep_col_final
sweep_row_collect = _impl.sweep_row_collect
sweep_col_collect = _impl.sweep_col_collect
brute_chain = _impl.brute_chain
brute_rrange = _impl.brute_rrange
brute_spatial = _impl.brute_spatial


def backend_name() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return BACKEND
