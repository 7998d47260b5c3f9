"""Synthetic camera rendering of crop fields.

Images are numpy ``(H, W, 3)`` uint8 arrays in RGB order.  Each plant's
canopy is modeled as a ground-plane disk; the disk center plus a ring of
16 boundary samples are projected through the pinhole model and the
resulting convex polygon is scanline-filled.  Plants are drawn far to near
(painter's algorithm on camera depth).  Everything is deterministic;
optional per-pixel Gaussian color noise is applied only when a noise
standard deviation and RNG are supplied.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .field import Field
from .geometry import CameraRig, Pose2, _camera_pose_world

__all__ = [
    "SOIL_COLOR",
    "PLANT_COLOR",
    "NEAR_CLIP",
    "render_view",
    "write_ppm",
    "write_pbm",
]

SOIL_COLOR = (120, 85, 60)
PLANT_COLOR = (40, 170, 50)
NEAR_CLIP = 0.05  # meters of camera depth below which points are discarded
RING_SAMPLES = 16

_RING_ANGLES = 2.0 * np.pi * np.arange(RING_SAMPLES) / RING_SAMPLES
_RING_UNIT = np.column_stack([np.cos(_RING_ANGLES), np.sin(_RING_ANGLES)])


def render_view(
    rig: CameraRig,
    robot: Pose2,
    field: Field,
    color_noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Render the field from a camera pose into an RGB uint8 image."""
    intr = rig.intrinsics
    img = np.empty((intr.height, intr.width, 3), dtype=np.uint8)
    img[:, :] = SOIL_COLOR
    plants = field.all_plants() if field.rows else np.zeros((0, 3))
    if len(plants):
        _draw_plants(img, rig, robot, plants)
    if color_noise_std > 0.0:
        if rng is None:
            raise ValueError("color noise requires an RNG for determinism")
        noise = rng.normal(0.0, color_noise_std, size=img.shape)
        img = np.clip(img.astype(np.float64) + noise, 0, 255).astype(np.uint8)
    return img


def _draw_plants(img: np.ndarray, rig: CameraRig, robot: Pose2, plants: np.ndarray) -> None:
    intr = rig.intrinsics
    r_wc, t_wc = _camera_pose_world(rig, robot)
    r_cw = r_wc.T

    world = np.column_stack([plants[:, 0], plants[:, 1], np.zeros(len(plants))])
    cam = (world - t_wc) @ r_wc  # == (r_cw @ (p - t)) rowwise
    radii = plants[:, 2]

    # cull by depth, then by a conservative projected bounding box
    vis = cam[:, 2] > NEAR_CLIP
    if not np.any(vis):
        return
    cam, radii = cam[vis], radii[vis]
    z = cam[:, 2]
    u = intr.fx * cam[:, 0] / z + intr.cx
    v = intr.fy * cam[:, 1] / z + intr.cy
    margin = max(intr.fx, intr.fy) * radii / z + 2.0
    keep = (
        (u + margin >= 0)
        & (u - margin < intr.width)
        & (v + margin >= 0)
        & (v - margin < intr.height)
    )
    if not np.any(keep):
        return
    cam, radii, z = cam[keep], radii[keep], z[keep]
    world = world[vis][keep]

    # painter's algorithm: far to near
    order = np.argsort(-z, kind="stable")
    world, radii = world[order], radii[order]

    # project canopy boundary rings for all plants at once
    ring = world[:, None, :2] + radii[:, None, None] * _RING_UNIT[None, :, :]
    ring3 = np.concatenate([ring, np.zeros((*ring.shape[:2], 1))], axis=2)
    ring_cam = (ring3.reshape(-1, 3) - t_wc) @ r_wc
    ring_z = ring_cam[:, 2].reshape(len(world), RING_SAMPLES)
    ring_u = (intr.fx * ring_cam[:, 0] / ring_cam[:, 2] + intr.cx).reshape(ring_z.shape)
    ring_v = (intr.fy * ring_cam[:, 1] / ring_cam[:, 2] + intr.cy).reshape(ring_z.shape)

    valid = ring_z > NEAR_CLIP
    n_valid = valid.sum(axis=1)
    keep_poly = n_valid >= 3
    if not np.any(keep_poly):
        return
    if np.all(n_valid[keep_poly] == RING_SAMPLES):
        # no ring is partially clipped (always the case away from nadir)
        uv = np.stack([ring_u[keep_poly], ring_v[keep_poly]], axis=2)
        verts = np.ascontiguousarray(uv.reshape(-1, 2), dtype=np.float64)
        counts_arr = np.full(int(keep_poly.sum()), RING_SAMPLES, dtype=np.int32)
    else:
        verts_list = []
        counts = []
        for i in np.flatnonzero(keep_poly):
            ok = valid[i]
            verts_list.append(np.column_stack([ring_u[i][ok], ring_v[i][ok]]))
            counts.append(int(ok.sum()))
        verts = np.ascontiguousarray(np.vstack(verts_list), dtype=np.float64)
        counts_arr = np.asarray(counts, dtype=np.int32)
    colors = np.tile(np.asarray(PLANT_COLOR, dtype=np.uint8), (len(counts_arr), 1))
    _kernels.fill_polygons(img, verts, counts_arr, np.ascontiguousarray(colors))


def write_ppm(path, img: np.ndarray) -> None:
    """Binary PPM (P6) dump of an RGB image."""
    from .io import atomic_write_bytes

    h, w = img.shape[:2]
    atomic_write_bytes(path, f"P6\n{w} {h}\n255\n".encode() + img.tobytes())


def write_pbm(path, mask: np.ndarray) -> None:
    """Binary PBM (P4) dump of a binary mask (set bit = foreground)."""
    from .io import atomic_write_bytes

    h, w = mask.shape
    packed = np.packbits(mask.astype(bool), axis=1)
    atomic_write_bytes(path, f"P4\n{w} {h}\n".encode() + packed.tobytes())
