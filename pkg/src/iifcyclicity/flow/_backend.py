"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``IIFCYC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

_compiled = None
if not os.environ.get("IIFCYC_PURE_PYTHON"):
    try:
        from . import _ckernel as _compiled
    except ImportError:  # extension not built
        _compiled = None

COMPILED = _compiled is not None
kernel = _compiled if COMPILED else _pykernel
BACKEND = "cython" if COMPILED else "python"


def get_kernel(name: str | None = None):
    """Return the kernel module by name (``"cython"``, ``"python"``) or the default."""
    if name is None:
        return kernel
    if name == "python":
        return _pykernel
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown kernel {name!r}")


def available_kernels() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]
