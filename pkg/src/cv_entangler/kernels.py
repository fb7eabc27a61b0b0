"""Backend selection for the capacity kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``CV_ENTANGLER_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the pure-Python implementation is used.  ``BACKEND`` names
the active one.
"""

import os

from . import _kernels_py as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("CV_ENTANGLER_PURE_PYTHON", "0") in ("", "0"):
    capacity_point = compiled_backend.capacity_point
    capacity_grid = compiled_backend.capacity_grid
    BACKEND = "compiled"
else:
    capacity_point = python_backend.capacity_point
    capacity_grid = python_backend.capacity_grid
    BACKEND = "python"

__all__ = ["BACKEND", "capacity_grid", "capacity_point", "compiled_backend", "python_backend"]
