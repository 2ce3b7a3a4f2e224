"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; the numpy
fallback is used otherwise. `COSAL_BACKEND=python|cython` forces a choice
(forcing `cython` raises if the extension is unavailable).
"""

import os

from cosal.autodiff import _convpy

_forced = os.environ.get("COSAL_BACKEND", "auto").lower()

if _forced == "python":
    _impl = _convpy
    BACKEND = "python"
else:
    try:
        from cosal.autodiff import _convcore as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _convpy
        BACKEND = "python"

im2col = _impl.im2col
col2im = _impl.col2im
