"""Backend selection for the split-search kernel.

The compiled extension is used when it was built; set ``PREAMBLEDET_PURE=1``
to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _split_py

_ext = None
if not os.environ.get("PREAMBLEDET_PURE"):
    try:
        from . import _split_ext as _ext
    except ImportError:  # extension not built
        _ext = None

BACKENDS = {"python": _split_py.best_split}
if _ext is not None:
    BACKENDS["cython"] = _ext.best_split

DEFAULT_BACKEND = "cython" if "cython" in BACKENDS else "python"


def get_best_split(backend: str | None = None):
    name = backend or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"split backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
