"""Select the straightening kernel at import.

The compiled kernel is used when it was built; set ``ROCKLAND_PURE_PYTHON=1``
to force the fallback.
"""
import os

from . import _straighten_py

if os.environ.get("ROCKLAND_PURE_PYTHON", "") not in ("", "0"):
    Straightener = _straighten_py.Straightener
    BACKEND = "python"
else:
    try:
        from ._cstraighten import Straightener  # noqa: F401
        BACKEND = "cython"
    except ImportError:
        Straightener = _straighten_py.Straightener
        BACKEND = "python"

PyStraightener = _straighten_py.Straightener
