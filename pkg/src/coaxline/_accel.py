"""Numba/numpy dispatch for the hot kernels.

Kernels in ``kernels.py`` are written as plain vectorized numpy so the same
source runs on both paths.  The JIT path is the default; set
``COAXLINE_DISABLE_NUMBA=1`` (or any value other than ``0``) to force the
pure-numpy fallback, e.g. for debugging or on hosts without a working
numba install.  ``benchmarks/bench_kernels.py`` compares the two paths.
"""

import os


def _jit_wanted() -> bool:
    flag = os.environ.get("COAXLINE_DISABLE_NUMBA", "").strip()
    if flag not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _jit_wanted()

if NUMBA_ENABLED:
    from numba import njit
else:

    def njit(*args, **kwargs):  # noqa: D103 - mirrors numba.njit signature
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap
