"""Selects the compiled detector kernel when available.

Set SWITCHRL_PURE_PYTHON=1 to force the numpy fallback (used by the
benchmark script and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernel_py

if os.environ.get("SWITCHRL_PURE_PYTHON") == "1":
    _impl = _kernel_py
    BACKEND = "python"
else:
    try:
        from . import _kernel_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernel_py
        BACKEND = "python"

step_kernel = _impl.step_kernel
run_stream = _impl.run_stream
