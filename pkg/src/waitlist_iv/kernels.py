"""Kernel backend selected at import.

The compiled extension is used when it is built and
``WAITLIST_IV_PURE_PYTHON`` is unset; otherwise the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("WAITLIST_IV_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
combination_patterns = _impl.combination_patterns
waitlist_batch = _impl.waitlist_batch
group_demean = _impl.group_demean

T_COL, FILLED_COL, N_W1, ACC_W1, N_W0, ACC_W0 = range(6)


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
