"""Selects the compiled EVI kernel when available.

Set SWITCHRL_PURE_PYTHON=1 to force the numpy fallback (used by the
benchmark script and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _evi_py

if os.environ.get("SWITCHRL_PURE_PYTHON") == "1":
    _impl = _evi_py
    BACKEND = "python"
else:
    try:
        from . import _evi_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _evi_py
        BACKEND = "python"

run_evi = _impl.run_evi
