"""Kernel backend selection.

The compiled extension is preferred; set MS_FORCE_PY=1 to force the pure
numpy fallback (used by the benchmark and as a safety net on platforms
where the extension failed to build).
"""
import os

if os.environ.get("MS_FORCE_PY") == "1":
    from .pure import BACKEND, convex_mask, edt_squared
else:
    try:
        from ._fastcore import BACKEND, convex_mask, edt_squared
    except ImportError:
        from .pure import BACKEND, convex_mask, edt_squared

__all__ = ["BACKEND", "convex_mask", "edt_squared"]
