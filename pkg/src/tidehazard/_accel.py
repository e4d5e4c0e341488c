"""Backend selection for the numeric kernels.

Set ``TIDEHAZARD_NO_NUMBA=1`` to force the pure-numpy path even when numba
is importable. The choice is made once, at import time.
"""

import os

_DISABLED = os.environ.get("TIDEHAZARD_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by TIDEHAZARD_NO_NUMBA")
    import numba  # noqa: F401
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        # Bare decorator or decorator factory; either way hand back the python function.
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func


BACKEND = "numba" if HAS_NUMBA else "numpy"
