"""Crop-row perception: vegetation mask, crop centers, sliding-window
tracking, robust line fitting and the image feature vector.

The image feature is ``s = [X, Y, Theta]``: the fitted row line evaluated
at the image row of the bottom-most inlier crop, expressed relative to the
image center (X right-positive, Y down-positive), plus the signed angle
Theta between the line and the image vertical.  Theta is positive when the
row tangent leans right going up the image; the desired feature for row
following is ``[0, H/2, 0]`` (line foot at the bottom center).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .geometry import (
    CameraIntrinsics,
    CameraRig,
    GroundPoint,
    PixelPoint,
    Pose2,
    backproject_to_ground,
    project,
    world_to_camera,
)

__all__ = [
    "DEFAULT_EXG_THRESHOLD",
    "DEFAULT_MIN_BLOB_AREA",
    "DEFAULT_WINDOW_FRACTION",
    "CropDetection",
    "SlidingWindow",
    "LineFit",
    "FeatureVec",
    "InsufficientPoints",
    "exg_mask",
    "detect_crops",
    "crops_in_window",
    "crops_below",
    "fit_row_line",
    "feature_from_fit",
    "initialize_window",
    "update_window",
    "shift_window",
    "desired_feature",
]

DEFAULT_EXG_THRESHOLD = 40
DEFAULT_MIN_BLOB_AREA = 4
DEFAULT_WINDOW_FRACTION = 0.35  # window width as a fraction of image width

HUBER_K = 1.345
IRLS_ITERATIONS = 10
IRLS_WEIGHT_TOL = 1e-6


class InsufficientPoints(ValueError):
    """Line fitting needs at least two crop detections."""


@dataclass(frozen=True)
class CropDetection:
    """Connected vegetation component: sub-pixel centroid and pixel area."""

    centroid: PixelPoint
    area: int


@dataclass(frozen=True)
class SlidingWindow:
    """Vertical image strip (full height) tracking the followed crop row."""

    center_x: float
    width: float
    img_width: int

    def contains(self, u: float) -> bool:
        return abs(u - self.center_x) <= self.width / 2.0


@dataclass(frozen=True)
class LineFit:
    """Image line as point + unit direction, with per-point inlier flags.

    The direction is canonicalized to point up the image (dv <= 0).
    """

    point: PixelPoint
    direction: tuple[float, float]
    inliers: tuple[bool, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True)
class FeatureVec:
    X: float  # pixels right of image center
    Y: float  # pixels below image center
    Theta: float  # radians from the image vertical


def desired_feature(intr: CameraIntrinsics) -> FeatureVec:
    """Target feature: path foot at the bottom center of the image."""
    return FeatureVec(0.0, intr.height / 2.0, 0.0)


def exg_mask(img: np.ndarray, threshold: int = DEFAULT_EXG_THRESHOLD) -> np.ndarray:
    """Excess Green Index mask: set where 2G - R - B > threshold (signed)."""
    return _kernels.exg_mask(np.ascontiguousarray(img), int(threshold))


def detect_crops(mask: np.ndarray, min_blob_area: int = DEFAULT_MIN_BLOB_AREA) -> list[CropDetection]:
    """Centroids of 4-connected components with at least ``min_blob_area``
    pixels, ordered near to far (descending image row, ties by column)."""
    areas, cu, cv = _kernels.label_stats(np.ascontiguousarray(mask, dtype=np.uint8))
    keep = areas >= min_blob_area
    areas, cu, cv = areas[keep], cu[keep], cv[keep]
    order = np.lexsort((cu, -cv))
    return [
        CropDetection(PixelPoint(float(cu[i]), float(cv[i])), int(areas[i])) for i in order
    ]


def crops_in_window(dets: list[CropDetection], win: SlidingWindow) -> list[CropDetection]:
    """Detections whose centroid column lies inside the window; order kept."""
    return [d for d in dets if win.contains(d.centroid.u)]


def crops_below(dets: list[CropDetection], v_min: float) -> list[CropDetection]:
    """Detections at or below an image row (the near-field band)."""
    return [d for d in dets if d.centroid.v >= v_min]


def initialize_window(intr: CameraIntrinsics, width: float | None = None) -> SlidingWindow:
    """Window centered on the image, default width 0.35 * image width."""
    if width is None:
        width = DEFAULT_WINDOW_FRACTION * intr.width
    return SlidingWindow(intr.width / 2.0, float(width), intr.width)


def update_window(win: SlidingWindow, dets_in_win: list[CropDetection]) -> SlidingWindow:
    """Recenter the window at the mean crop column of this frame."""
    if not dets_in_win:
        raise ValueError("update_window needs a non-empty detection list")
    center = sum(d.centroid.u for d in dets_in_win) / len(dets_in_win)
    center = min(max(center, 0.0), float(win.img_width - 1))
    return replace(win, center_x=center)


def shift_window(
    win: SlidingWindow,
    rig: CameraRig,
    robot: Pose2,
    delta: float,
    side: str,
    v_ref: float | None = None,
) -> SlidingWindow:
    """Shift the window onto the adjacent crop row.

    The current window center (at image row ``v_ref``, default 3/4 down the
    image) is backprojected to the ground, moved by one row spacing
    ``delta`` perpendicular to the robot heading, and reprojected; the
    window center moves by the resulting pixel displacement.  ``side`` is
    the image-frame direction of the next row: "left" means decreasing u.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if delta == 0.0:
        return win
    intr = rig.intrinsics
    if v_ref is None:
        v_ref = 0.75 * intr.height
    g = backproject_to_ground(rig, robot, PixelPoint(win.center_x, v_ref))
    # image-left corresponds to robot-left for the front camera and
    # robot-right for the back camera
    lateral = 1.0 if side == "left" else -1.0
    if rig.mount == "back":
        lateral = -lateral
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    shifted = GroundPoint(g.x - lateral * delta * s, g.y + lateral * delta * c)
    px = project(intr, world_to_camera(rig, robot, shifted))
    center = min(max(px.u, 0.0), float(win.img_width - 1))
    return replace(win, center_x=center)


def fit_row_line(dets: list[CropDetection]) -> LineFit:
    """Robust total-least-squares line through crop centroids.

    Iteratively reweighted orthogonal regression with Huber weights
    (tuning constant 1.345 times the rescaled MAD of the residuals), at
    most 10 iterations or until the weights change by less than 1e-6.
    Points with final weight > 0.5 are flagged as inliers.
    """
    if len(dets) < 2:
        raise InsufficientPoints(f"need >= 2 detections, got {len(dets)}")
    pts = np.array([[d.centroid.u, d.centroid.v] for d in dets])
    w = np.ones(len(pts))
    centroid = pts.mean(axis=0)
    direction = np.array([0.0, 1.0])
    for _ in range(IRLS_ITERATIONS):
        wsum = w.sum()
        centroid = (w[:, None] * pts).sum(axis=0) / wsum
        d = pts - centroid
        cxx = float((w * d[:, 0] * d[:, 0]).sum() / wsum)
        cxy = float((w * d[:, 0] * d[:, 1]).sum() / wsum)
        cyy = float((w * d[:, 1] * d[:, 1]).sum() / wsum)
        ang = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
        major = np.array([math.cos(ang), math.sin(ang)])
        # atan2 form gives an extremum; pick the larger-variance axis
        minor = np.array([-major[1], major[0]])
        var_major = cxx * major[0] ** 2 + 2 * cxy * major[0] * major[1] + cyy * major[1] ** 2
        var_minor = cxx * minor[0] ** 2 + 2 * cxy * minor[0] * minor[1] + cyy * minor[1] ** 2
        direction = major if var_major >= var_minor else minor
        normal = np.array([-direction[1], direction[0]])
        r = d @ normal
        mad = float(np.median(np.abs(r - np.median(r))))
        if mad < 1e-12:
            w_new = np.ones(len(pts))
        else:
            k = HUBER_K * 1.4826 * mad
            absr = np.abs(r)
            w_new = np.where(absr <= k, 1.0, k / np.maximum(absr, 1e-300))
        if np.max(np.abs(w_new - w)) < IRLS_WEIGHT_TOL:
            w = w_new
            break
        w = w_new
    if direction[1] > 0:
        direction = -direction
    return LineFit(
        point=PixelPoint(float(centroid[0]), float(centroid[1])),
        direction=(float(direction[0]), float(direction[1])),
        inliers=tuple(bool(x) for x in (w > 0.5)),
        weights=tuple(float(x) for x in w),
    )


def feature_from_fit(
    fit: LineFit, dets: list[CropDetection], intr: CameraIntrinsics
) -> FeatureVec:
    """Feature vector from a fitted line: the line evaluated at the image
    row of the bottom-most (nearest) inlier detection."""
    inlier_vs = [d.centroid.v for d, ok in zip(dets, fit.inliers) if ok]
    if not inlier_vs:
        inlier_vs = [d.centroid.v for d in dets]
    v_b = max(inlier_vs)
    du, dv = fit.direction
    if abs(dv) < 1e-9:
        u_b = fit.point.u
        theta = math.copysign(math.pi / 2 - 1e-9, du)
    else:
        u_b = fit.point.u + (v_b - fit.point.v) * du / dv
        theta = math.atan2(du, -dv)
    return FeatureVec(u_b - intr.width / 2.0, v_b - intr.height / 2.0, theta)
