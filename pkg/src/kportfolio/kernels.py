"""Backend selection for the hot kernels.

The compiled extension is used when importable. Setting
``KPORTFOLIO_BACKEND=python`` forces the numpy fallback.
"""
import importlib
import os

from . import _kernels_py

_FORCED = os.environ.get("KPORTFOLIO_BACKEND", "").lower()


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("kportfolio._kernels")
    raise ValueError(f"unknown kernel backend {name!r}")


if _FORCED == "python":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        if _FORCED == "cython":
            raise
        _impl = _kernels_py
        BACKEND = "python"

combo_eval = _impl.combo_eval
base_eval = _impl.base_eval
eaf_counts = _impl.eaf_counts
candidate_perf = _impl.candidate_perf
