"""Compiled image kernels: excess-green mask, 4-connected component
statistics, and convex-polygon scanline rasterization.

Bit-compatible with the numpy/scipy fallback in ``_pure.py``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()

BACKEND = "compiled"


def exg_mask(cnp.uint8_t[:, :, ::1] img, int threshold):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t v, u
    cdef int exg
    for v in range(h):
        for u in range(w):
            exg = 2 * <int>img[v, u, 1] - <int>img[v, u, 0] - <int>img[v, u, 2]
            if exg > threshold:
                out[v, u] = 1
    return out_arr


cdef inline int _find(cnp.int32_t[::1] parent, int i) nogil:
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


def label_stats(cnp.uint8_t[:, ::1] mask):
    """4-connected components; returns (areas, centroid_u, centroid_v).

    Components are numbered in raster order of their first pixel, matching
    ``scipy.ndimage.label``.
    """
    cdef Py_ssize_t h = mask.shape[0], w = mask.shape[1]
    cdef cnp.int32_t[:, ::1] labels = np.zeros((h, w), dtype=np.int32)
    # worst case: checkerboard, one provisional label per two pixels
    parent_arr = np.zeros(h * w // 2 + 2, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef int next_label = 1
    cdef Py_ssize_t v, u
    cdef int left, top, rl, rt, r

    for v in range(h):
        for u in range(w):
            if mask[v, u] == 0:
                continue
            left = labels[v, u - 1] if u > 0 else 0
            top = labels[v - 1, u] if v > 0 else 0
            if left == 0 and top == 0:
                parent[next_label] = next_label
                labels[v, u] = next_label
                next_label += 1
            elif left != 0 and top != 0:
                rl = _find(parent, left)
                rt = _find(parent, top)
                r = rl if rl < rt else rt
                parent[rl] = r
                parent[rt] = r
                labels[v, u] = r
            else:
                labels[v, u] = left if left != 0 else top

    # resolve provisional labels to compact ids in raster order
    remap_arr = np.zeros(next_label, dtype=np.int32)
    cdef cnp.int32_t[::1] remap = remap_arr
    cdef int count = 0
    areas_arr = np.zeros(next_label, dtype=np.int64)
    sum_u_arr = np.zeros(next_label, dtype=np.float64)
    sum_v_arr = np.zeros(next_label, dtype=np.float64)
    cdef cnp.int64_t[::1] areas = areas_arr
    cdef cnp.float64_t[::1] sum_u = sum_u_arr
    cdef cnp.float64_t[::1] sum_v = sum_v_arr
    cdef int lab, cid

    for v in range(h):
        for u in range(w):
            lab = labels[v, u]
            if lab == 0:
                continue
            r = _find(parent, lab)
            cid = remap[r]
            if cid == 0:
                count += 1
                remap[r] = count
                cid = count
            areas[cid] += 1
            sum_u[cid] += u
            sum_v[cid] += v

    if count == 0:
        return (np.zeros(0, np.int64), np.zeros(0), np.zeros(0))
    a = areas_arr[1 : count + 1]
    return (a, sum_u_arr[1 : count + 1] / a, sum_v_arr[1 : count + 1] / a)


def fill_polygons(
    cnp.uint8_t[:, :, ::1] img,
    cnp.float64_t[:, ::1] verts,
    cnp.int32_t[::1] counts,
    cnp.uint8_t[:, ::1] colors,
):
    """Scanline-fill polygons in order; pixels sampled at integer coords."""
    cdef Py_ssize_t height = img.shape[0], width = img.shape[1]
    cdef Py_ssize_t npoly = counts.shape[0]
    cdef Py_ssize_t k, i, start = 0
    cdef int n, v, u, v_lo, v_hi, u_lo, u_hi
    cdef double u1, v1, u2, v2, x, lo, hi, vmin, vmax
    cdef cnp.uint8_t cr, cg, cb

    for k in range(npoly):
        n = counts[k]
        if n < 3:
            start += n
            continue
        vmin = verts[start, 1]
        vmax = verts[start, 1]
        for i in range(1, n):
            if verts[start + i, 1] < vmin:
                vmin = verts[start + i, 1]
            if verts[start + i, 1] > vmax:
                vmax = verts[start + i, 1]
        v_lo = <int>ceil(vmin)
        v_hi = <int>floor(vmax)
        if v_lo < 0:
            v_lo = 0
        if v_hi > <int>height - 1:
            v_hi = <int>height - 1
        cr, cg, cb = colors[k, 0], colors[k, 1], colors[k, 2]
        for v in range(v_lo, v_hi + 1):
            lo = 1e300
            hi = -1e300
            for i in range(n):
                u1 = verts[start + i, 0]
                v1 = verts[start + i, 1]
                u2 = verts[start + ((i + 1) % n), 0]
                v2 = verts[start + ((i + 1) % n), 1]
                if v1 == v2:
                    continue
                if (v1 <= v < v2) or (v2 <= v < v1):
                    x = u1 + (v - v1) * (u2 - u1) / (v2 - v1)
                    if x < lo:
                        lo = x
                    if x > hi:
                        hi = x
            if hi < lo:
                continue
            u_lo = <int>ceil(lo)
            u_hi = <int>floor(hi)
            if u_lo < 0:
                u_lo = 0
            if u_hi > <int>width - 1:
                u_hi = <int>width - 1
            for u in range(u_lo, u_hi + 1):
                img[v, u, 0] = cr
                img[v, u, 1] = cg
                img[v, u, 2] = cb
        start += n
