"""Hot numeric kernels with a numba path and a numpy fallback.

The compiled path is used when numba imports and the environment variable
``WAVEHARM_DISABLE_JIT`` is unset (or ``0``). Both implementations stay
importable as :data:`numpy_impl` and :data:`jit_impl` for cross-checks and
benchmarking; :data:`jit_impl` is ``None`` without numba.
"""

import os

from . import numpy_impl

try:
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # prefer OpenMP / workqueue; an outdated TBB only produces warnings
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    from . import jit_impl
except ImportError:  # numba missing
    jit_impl = None

JIT_REQUESTED = os.environ.get("WAVEHARM_DISABLE_JIT", "0").strip().lower() in ("", "0", "false", "no")
USING_JIT = JIT_REQUESTED and jit_impl is not None

active = jit_impl if USING_JIT else numpy_impl

legendre_table = active.legendre_table
hankel_table = active.hankel_table
assemble_moments = active.assemble_moments
gram_schmidt = active.gram_schmidt
sigma_double_sum = active.sigma_double_sum


def set_threads(n):
    """Apply a thread count to numba when it is in use. Returns the count applied."""
    if n is None or n < 1:
        return None
    if jit_impl is not None:
        n = min(n, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(n)
    return n


__all__ = [
    "USING_JIT",
    "active",
    "assemble_moments",
    "gram_schmidt",
    "hankel_table",
    "jit_impl",
    "legendre_table",
    "numpy_impl",
    "set_threads",
    "sigma_double_sum",
]
