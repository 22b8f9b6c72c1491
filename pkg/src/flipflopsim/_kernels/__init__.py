"""Propagation kernel backend selection.

The compiled Cython stepper is used when available; otherwise the pure
numpy implementation is selected.  Set FLIPFLOPSIM_PURE=1 to force the
fallback (useful for benchmarking and debugging).
"""

from __future__ import annotations

import os

if os.environ.get("FLIPFLOPSIM_PURE") == "1":
    from . import _stepper_py as _impl
else:
    try:
        from . import _stepper as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _stepper_py as _impl

BACKEND = _impl.BACKEND
propagate_vector = _impl.propagate_vector
propagate_density = _impl.propagate_density

__all__ = ["BACKEND", "propagate_vector", "propagate_density"]
