"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``STURMKIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKENDS = {"python": _pykernels}
try:
    from . import _ckernels
except ImportError:
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("STURMKIT_PURE_PYTHON") != "1":
    kernels = _ckernels
    BACKEND = "cython"
else:
    kernels = _pykernels
    BACKEND = "python"
