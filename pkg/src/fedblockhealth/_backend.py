"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback. ``FBH_BACKEND=python`` forces the fallback and
``FBH_BACKEND=cython`` makes a missing extension an import error.
"""
import os

from . import _kernels_py

_choice = os.environ.get("FBH_BACKEND", "auto").lower()

compiled = None
if _choice != "python":
    try:
        from . import _kernels as compiled
    except ImportError:
        if _choice == "cython":
            raise

kernels = compiled if compiled is not None else _kernels_py
BACKEND = "cython" if compiled is not None else "python"


def available():
    """Mapping of backend name to kernel module for every importable backend."""
    found = {"python": _kernels_py}
    if compiled is not None:
        found["cython"] = compiled
    return found
