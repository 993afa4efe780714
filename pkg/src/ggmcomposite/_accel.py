"""Backend selection for the numeric kernels.

Kernels exist in two flavours: a numba-compiled loop version and a pure numpy
version. The numba path is used when numba imports and the environment
variable ``GGMCOMPOSITE_NUMBA`` is not set to a false-ish value
(``0``, ``false``, ``no``, ``off``).
"""

import os

ENV_FLAG = "GGMCOMPOSITE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_enabled():
    value = os.environ.get(ENV_FLAG, "1").strip().lower()
    return value not in ("0", "false", "no", "off")


USE_NUMBA = HAVE_NUMBA and _env_enabled()


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
