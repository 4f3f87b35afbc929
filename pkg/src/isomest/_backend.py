"""Kernel backend chosen at import time.

The compiled extension is used when it imports; setting ``ISOMEST_PURE=1``
forces the pure-Python kernels.
"""

import os

from . import _pykernels

if os.environ.get("ISOMEST_PURE", "") not in ("", "0"):
    kernels = _pykernels
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "cython"
    except ImportError:  # extension not built
        kernels = _pykernels
        NAME = "python"

__all__ = ["kernels", "NAME"]
