"""Kernel backend selection: compiled extension if available, numpy fallback.

Set COLLARFLOW_PURE_PYTHON=1 to force the fallback (used by the parity tests
and the benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("COLLARFLOW_PURE_PYTHON", "") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:
        kernels = _kernels_py


def backend_name():
    return kernels.BACKEND
