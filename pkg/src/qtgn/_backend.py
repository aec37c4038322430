"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Set ``QTGN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if os.environ.get("QTGN_PURE_PYTHON", "") not in ("", "0") or _ckernels is None:
    kernels = _pykernels
    NAME = "python"
else:
    kernels = _ckernels
    NAME = "cython"


def get(name):
    """Return the kernel module registered under ``name``."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
