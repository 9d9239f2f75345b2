"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference kernels. Set ``CREDITNET_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("CREDITNET_BACKEND", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
picard_clear = _impl.picard_clear
removal_search = _impl.removal_search
compression_search = _impl.compression_search

__all__ = ["BACKEND", "picard_clear", "removal_search", "compression_search", "_pykernels"]
