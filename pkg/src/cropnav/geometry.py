"""Frames, camera models, projections and velocity transforms.

Coordinate conventions (used consistently across the whole package):

World frame
    x/y span the ground plane, z points up.  The ground is z = 0.

Robot frame
    Origin at the rotation center of the differential drive, on the ground.
    x points forward, y points left, z points up.  The robot pose in the
    world is ``q = [x, y, theta]`` with ``theta`` the heading angle.

Camera frame
    Standard computer-vision pinhole frame: +z along the optical axis into
    the scene, +x to the right in the image, +y down in the image.

Camera mounting
    Each camera sits on the robot's longitudinal axis at height ``tz`` and
    signed longitudinal offset (positive forward).  The tilt ``rho`` is
    measured from the *downward vertical*: ``rho = 0`` looks straight at the
    ground, ``rho`` close to ``pi/2`` looks at the horizon.  The front
    camera tilts forward, the back camera backward; the two rigs are
    mirror images through the robot center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "GeometryError",
    "PointBehindCamera",
    "NoGroundIntersection",
    "Pose2",
    "CameraIntrinsics",
    "CameraRig",
    "GroundPoint",
    "PixelPoint",
    "default_intrinsics",
    "camera_pair",
    "world_to_camera",
    "world_to_camera_batch",
    "project",
    "project_batch",
    "backproject_to_ground",
    "camera_twist_of_robot",
    "camera_twist_matrix",
    "ground_plane_in_camera",
    "ground_depth_from_pixel",
]


class GeometryError(ValueError):
    """Base class for geometric failure modes."""


class PointBehindCamera(GeometryError):
    """Projection was requested for a point with non-positive depth."""


class NoGroundIntersection(GeometryError):
    """A pixel ray does not hit the ground plane in front of the camera."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    t = math.fmod(theta + math.pi, 2.0 * math.pi)
    if t <= 0.0:
        t += 2.0 * math.pi
    return t - math.pi


class GroundPoint(NamedTuple):
    x: float
    y: float


class PixelPoint(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class Pose2:
    """Planar robot configuration [x, y, theta] in the world frame."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise GeometryError("principal point must lie inside the image")


def default_intrinsics() -> CameraIntrinsics:
    """320x240 camera with ~60 deg horizontal field of view."""
    return CameraIntrinsics(fx=277.0, fy=277.0, cx=160.0, cy=120.0, width=320, height=240)


@dataclass(frozen=True)
class CameraRig:
    """A camera mounted on the robot.

    ``mount`` is "front" or "back".  ``longitudinal_offset`` is signed along
    the robot x axis (positive for the front camera, negative for the back
    one).  ``rho`` is the tilt from the downward vertical, ``tz`` the height
    of the optical center above the ground.
    """

    mount: str
    rho: float
    tz: float
    longitudinal_offset: float
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        if self.mount not in ("front", "back"):
            raise GeometryError(f"unknown mount {self.mount!r}")
        if not 0.0 <= self.rho < math.pi / 2:
            raise GeometryError("tilt must lie in [0, pi/2)")
        if self.tz <= 0.0:
            raise GeometryError("camera height must be positive")

    def origin_robot(self) -> np.ndarray:
        """Optical center in robot coordinates."""
        return np.array([self.longitudinal_offset, 0.0, self.tz])

    def rotation_robot(self) -> np.ndarray:
        """Camera-to-robot rotation; columns are the camera axes."""
        cr, sr = math.cos(self.rho), math.sin(self.rho)
        if self.mount == "front":
            x_c = (0.0, -1.0, 0.0)
            y_c = (-cr, 0.0, -sr)
            z_c = (sr, 0.0, -cr)
        else:
            x_c = (0.0, 1.0, 0.0)
            y_c = (cr, 0.0, -sr)
            z_c = (-sr, 0.0, -cr)
        return np.array([x_c, y_c, z_c]).T

    def with_tilt_error(self, tilt_error: float) -> "CameraRig":
        return replace(self, rho=self.rho + tilt_error)


def camera_pair(
    intr: CameraIntrinsics | None = None,
    rho: float = math.radians(75.0),
    tz: float = 0.45,
    offset: float = 0.30,
) -> tuple[CameraRig, CameraRig]:
    """Mirror-symmetric front/back rig pair with the package defaults."""
    if intr is None:
        intr = default_intrinsics()
    front = CameraRig("front", rho, tz, offset, intr)
    back = CameraRig("back", rho, tz, -offset, intr)
    return front, back


def _camera_pose_world(rig: CameraRig, robot: Pose2) -> tuple[np.ndarray, np.ndarray]:
    """Return (R_wc, t_wc): camera-to-world rotation and camera origin."""
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    r_wr = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    r_wc = r_wr @ rig.rotation_robot()
    t_wc = np.array([robot.x, robot.y, 0.0]) + r_wr @ rig.origin_robot()
    return r_wc, t_wc


def world_to_camera(rig: CameraRig, robot: Pose2, p: GroundPoint) -> np.ndarray:
    """Express a ground point in the camera frame."""
    r_wc, t_wc = _camera_pose_world(rig, robot)
    d = np.array([p[0], p[1], 0.0]) - t_wc
    return r_wc.T @ d


def world_to_camera_batch(rig: CameraRig, robot: Pose2, pts: np.ndarray) -> np.ndarray:
    """Vectorized variant: pts is (N, 2) ground coordinates, returns (N, 3)."""
    r_wc, t_wc = _camera_pose_world(rig, robot)
    world = np.column_stack([pts[:, 0], pts[:, 1], np.zeros(len(pts))])
    return (world - t_wc) @ r_wc


def project(intr: CameraIntrinsics, pc: np.ndarray) -> PixelPoint:
    """Pinhole projection of a camera-frame point; requires positive depth."""
    x, y, z = float(pc[0]), float(pc[1]), float(pc[2])
    if z <= 0.0:
        raise PointBehindCamera(f"depth {z:.6g} is not positive")
    return PixelPoint(intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy)


def project_batch(intr: CameraIntrinsics, pc: np.ndarray) -> np.ndarray:
    """Project (N, 3) camera points to (N, 2) pixels; caller filters depths."""
    z = pc[:, 2]
    return np.column_stack([intr.fx * pc[:, 0] / z + intr.cx, intr.fy * pc[:, 1] / z + intr.cy])


def backproject_to_ground(rig: CameraRig, robot: Pose2, px: PixelPoint) -> GroundPoint:
    """Intersect the ray through a pixel with the ground plane z = 0.

    Raises :class:`NoGroundIntersection` when the ray is (numerically)
    parallel to the ground or hits it behind the camera.
    """
    intr = rig.intrinsics
    r_wc, t_wc = _camera_pose_world(rig, robot)
    d_cam = np.array([(px[0] - intr.cx) / intr.fx, (px[1] - intr.cy) / intr.fy, 1.0])
    d_world = r_wc @ d_cam
    if abs(d_world[2]) < 1e-12:
        raise NoGroundIntersection("pixel ray is parallel to the ground plane")
    t = -t_wc[2] / d_world[2]
    if t <= 0.0:
        raise NoGroundIntersection("ground intersection lies behind the camera")
    hit = t_wc + t * d_world
    return GroundPoint(float(hit[0]), float(hit[1]))


def ground_plane_in_camera(rig: CameraRig) -> tuple[np.ndarray, float]:
    """Ground plane as ``n . p_cam = d`` in camera coordinates.

    ``n`` is the world up direction expressed in the camera frame and
    ``d = -tz``.  Independent of the robot pose.
    """
    n = rig.rotation_robot().T @ np.array([0.0, 0.0, 1.0])
    return n, -rig.tz


def ground_depth_from_pixel(rig: CameraRig, px: PixelPoint) -> float:
    """Depth (camera z) of the ground point seen at a pixel.

    Uses the ground-plane constraint; raises :class:`NoGroundIntersection`
    for pixels at or above the horizon.
    """
    intr = rig.intrinsics
    n, d = ground_plane_in_camera(rig)
    x = (px[0] - intr.cx) / intr.fx
    y = (px[1] - intr.cy) / intr.fy
    denom = n[0] * x + n[1] * y + n[2]
    if denom >= -1e-12:
        raise NoGroundIntersection("pixel is at or above the horizon")
    z = d / denom
    if z <= 0.0:
        raise NoGroundIntersection("ground point would be behind the camera")
    return float(z)


def camera_twist_matrix(rig: CameraRig) -> np.ndarray:
    """Linear map from robot controls (v, omega) to the camera twist.

    The twist is the 6-vector (vx, vy, vz, wx, wy, wz) of the camera frame
    expressed in camera coordinates.  The linear part is the velocity of the
    optical center; the camera origin sits at ``(offset, 0, tz)`` in the
    robot frame so a pure rotation drags it sideways at ``omega * offset``.
    """
    r_rc = rig.rotation_robot()
    # per unit v: translation along robot x; per unit omega: rotation about
    # robot z, moving the camera origin along robot y.
    lin_v = r_rc.T @ np.array([1.0, 0.0, 0.0])
    lin_w = r_rc.T @ np.array([0.0, rig.longitudinal_offset, 0.0])
    ang_v = np.zeros(3)
    ang_w = r_rc.T @ np.array([0.0, 0.0, 1.0])
    t = np.zeros((6, 2))
    t[:3, 0], t[3:, 0] = lin_v, ang_v
    t[:3, 1], t[3:, 1] = lin_w, ang_w
    return t


def camera_twist_of_robot(rig: CameraRig, u) -> np.ndarray:
    """Camera spatial velocity produced by robot controls ``u = (v, omega)``."""
    v, omega = float(u[0]), float(u[1])
    return camera_twist_matrix(rig) @ np.array([v, omega])
