"""Kernel selection: compiled ``_kernels`` when importable, else pure Python.

Set ``NELSON_TOPOS_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py
from ._kernels_py import KernelLimit

BACKEND = "python"
closure = _kernels_py.closure
congruence = _kernels_py.congruence
closed_subsets = _kernels_py.closed_subsets
natural_maps = _kernels_py.natural_maps

if not os.environ.get("NELSON_TOPOS_PURE"):
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        closed_subsets = _kernels.closed_subsets
        natural_maps = _kernels.natural_maps

__all__ = [
    "BACKEND",
    "KernelLimit",
    "closed_subsets",
    "closure",
    "congruence",
    "natural_maps",
]
