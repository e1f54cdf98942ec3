"""Backend switch for the numeric kernels.

Set ``EBGLM_DISABLE_NUMBA=1`` to force the pure-numpy kernels (useful for
debugging, coverage runs, or platforms without a working numba).
"""
import os

_FALSE = {"", "0", "false", "no", "off"}


def numba_requested():
    return os.environ.get("EBGLM_DISABLE_NUMBA", "").strip().lower() in _FALSE


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"
