"""Backend selection for the numeric kernels.

Set ``CROSSAL_DISABLE_JIT=1`` to force the pure-numpy kernels even when numba
is importable. The choice is made once, at import time.
"""
import os

_FLAG = os.environ.get("CROSSAL_DISABLE_JIT", "").strip().lower()
JIT_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not JIT_DISABLED
