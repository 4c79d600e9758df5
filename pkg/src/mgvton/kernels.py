"""Backend selection for the raster/sampling kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. ``MGVTON_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MGVTON_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

paint_capsule = _impl.paint_capsule
paint_convex_polygon = _impl.paint_convex_polygon
disc_stack = _impl.disc_stack
bilinear_sample = _impl.bilinear_sample

__all__ = ["BACKEND", "paint_capsule", "paint_convex_polygon", "disc_stack", "bilinear_sample"]
