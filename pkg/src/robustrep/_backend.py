"""Select the kernel implementation at import time.

The compiled module is used when it imports cleanly. Setting
``ROBUSTREP_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _fallback

kernels = _fallback
BACKEND = "python"

if not os.environ.get("ROBUSTREP_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["kernels", "BACKEND"]
