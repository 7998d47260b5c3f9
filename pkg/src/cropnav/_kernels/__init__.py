"""Backend selection for the hot image kernels.

Prefers the compiled Cython extension; falls back to the numpy/scipy
implementation when the extension is missing or ``CROPNAV_PURE=1`` is set.
Both lanes expose ``exg_mask``, ``label_stats``, ``fill_polygons`` and a
``BACKEND`` tag with identical semantics.
"""

import os

from . import _pure

if os.environ.get("CROPNAV_PURE") == "1":
    _impl = _pure
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pure

exg_mask = _impl.exg_mask
label_stats = _impl.label_stats
fill_polygons = _impl.fill_polygons


def active_backend() -> str:
    """Name of the kernel lane in use: "compiled" or "python"."""
    return _impl.BACKEND
