"""Numpy/scipy implementations of the hot image kernels.

Same contracts as the compiled lane in ``_core.pyx``; used when the
extension is unavailable or when ``CROPNAV_PURE=1`` forces it.  The two
lanes must stay bit-compatible (see tests/test_kernels.py).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

BACKEND = "python"

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def exg_mask(img: np.ndarray, threshold: int) -> np.ndarray:
    """Excess-green vegetation mask: set where 2G - R - B > threshold."""
    rgb = img.astype(np.int32)
    exg = 2 * rgb[:, :, 1] - rgb[:, :, 0] - rgb[:, :, 2]
    return (exg > threshold).astype(np.uint8)


def label_stats(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """4-connected component statistics of a binary mask.

    Returns (areas, centroid_u, centroid_v), one entry per component, in
    scipy label order.  Centroids are arithmetic means of member pixel
    coordinates (u = column, v = row).
    """
    labels, count = ndimage.label(mask, structure=_FOUR_CONN)
    if count == 0:
        return (np.zeros(0, np.int64), np.zeros(0), np.zeros(0))
    flat = labels.ravel()
    areas = np.bincount(flat, minlength=count + 1)[1:]
    vv, uu = np.indices(mask.shape)
    sum_u = np.bincount(flat, weights=uu.ravel(), minlength=count + 1)[1:]
    sum_v = np.bincount(flat, weights=vv.ravel(), minlength=count + 1)[1:]
    return areas.astype(np.int64), sum_u / areas, sum_v / areas


def _scanline_span(verts: np.ndarray, v: float) -> tuple[float, float] | None:
    """Horizontal span of a polygon at scanline height v (pixel centers)."""
    n = len(verts)
    lo, hi = np.inf, -np.inf
    for i in range(n):
        u1, v1 = verts[i]
        u2, v2 = verts[(i + 1) % n]
        if v1 == v2:
            continue
        # half-open in v so shared vertices are counted once
        if (v1 <= v < v2) or (v2 <= v < v1):
            u = u1 + (v - v1) * (u2 - u1) / (v2 - v1)
            lo = min(lo, u)
            hi = max(hi, u)
    if hi < lo:
        return None
    return lo, hi


def fill_polygons(
    img: np.ndarray,
    verts: np.ndarray,
    counts: np.ndarray,
    colors: np.ndarray,
) -> None:
    """Scanline-fill polygons into an RGB image, in order (painter's).

    ``verts`` is (total_vertices, 2) float64 pixel coordinates, ``counts``
    the vertex count per polygon, ``colors`` (n, 3) uint8.  Pixels are
    sampled at integer coordinates.
    """
    height, width = img.shape[:2]
    start = 0
    for k, n in enumerate(counts):
        poly = verts[start : start + n]
        start += n
        if n < 3:
            continue
        v_lo = max(int(np.ceil(poly[:, 1].min())), 0)
        v_hi = min(int(np.floor(poly[:, 1].max())), height - 1)
        color = colors[k]
        for v in range(v_lo, v_hi + 1):
            span = _scanline_span(poly, float(v))
            if span is None:
                continue
            u_lo = max(int(np.ceil(span[0])), 0)
            u_hi = min(int(np.floor(span[1])), width - 1)
            if u_hi >= u_lo:
                img[v, u_lo : u_hi + 1] = color
