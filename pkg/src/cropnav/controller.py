"""Image-based visual-servoing controller for crop-row following.

The robot drives at a fixed translational speed; the controller regulates
only the angular velocity from the image feature error.  With feature
dynamics ``sdot = J u = J_v v + J_w w`` the feedback law is

    w = -pinv(J_w) (lambda * e + J_v * v),   lambda > 0,

where ``J = L_s T`` composes the image interaction matrix ``L_s`` with the
robot-to-camera velocity transform ``T``, and ``e = s - s*`` is taken over
the regulated components (X, Theta).  Y is left unregulated: with v fixed
and only w free, progression along the row is not independently
controllable.

The point rows of ``L_s`` are the standard pinhole point interaction
matrix with depth recovered from the ground-plane constraint.  The Theta
row is the image-line orientation dynamics obtained by differentiating the
ground-plane motion field along the line direction, which is the canonical
line form specialized to a planar target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CameraIntrinsics,
    CameraRig,
    GeometryError,
    NoGroundIntersection,
    Pose2,
    camera_twist_matrix,
    ground_plane_in_camera,
)
from .perception import FeatureVec

__all__ = [
    "ControlVec",
    "ControllerParams",
    "DegenerateJacobian",
    "DegenerateDepth",
    "point_interaction_rows",
    "theta_interaction_row",
    "interaction_matrix",
    "feature_jacobian",
    "control_step",
]


class DegenerateDepth(GeometryError):
    """The feature point has no usable ground-plane depth (horizon)."""


class DegenerateJacobian(RuntimeError):
    """The angular-velocity column vanished; treat as a detection failure."""


@dataclass(frozen=True)
class ControlVec:
    v: float
    omega: float


@dataclass(frozen=True)
class ControllerParams:
    lam: float = 1.0  # feedback gain, 1/s
    v_star: float = 0.4  # fixed forward speed, m/s
    omega_max: float = 1.5  # actuator limit, rad/s
    weight_x: float = 1.0  # X error weight, applied in normalized units
    weight_theta: float = 1.0  # Theta error weight, radians

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("feedback gain must be positive")
        if self.omega_max <= 0:
            raise ValueError("omega_max must be positive")


def point_interaction_rows(x: float, y: float, z: float) -> np.ndarray:
    """Canonical 2x6 point interaction matrix in normalized coordinates."""
    return np.array(
        [
            [-1.0 / z, 0.0, x / z, x * y, -(1.0 + x * x), y],
            [0.0, -1.0 / z, y / z, 1.0 + y * y, -x * y, -x],
        ]
    )


def _motion_field_jacobian(
    x: float, y: float, twist: np.ndarray, alpha: float, beta: float, gamma: float
) -> tuple[float, float, float, float]:
    """Spatial derivatives of the ground-plane motion field at (x, y).

    For points on the ground plane the inverse depth is affine in the
    normalized image coordinates: 1/Z = alpha*x + beta*y + gamma.  Returns
    (d(xdot)/dx, d(xdot)/dy, d(ydot)/dx, d(ydot)/dy) for the given camera
    twist (vx, vy, vz, wx, wy, wz).
    """
    vx, vy, vz, wx, wy, wz = twist
    inv_z = alpha * x + beta * y + gamma
    a11 = vz * inv_z + (-vx + x * vz) * alpha + y * wx - 2.0 * x * wy
    a12 = (-vx + x * vz) * beta + x * wx + wz
    a21 = (-vy + y * vz) * alpha - y * wy - wz
    a22 = vz * inv_z + (-vy + y * vz) * beta + 2.0 * y * wx - x * wy
    return a11, a12, a21, a22


def theta_interaction_row(
    x: float,
    y: float,
    theta: float,
    plane: tuple[float, float, float],
    intr: CameraIntrinsics,
) -> np.ndarray:
    """1x6 interaction row for the line orientation feature Theta.

    Theta is measured from the image vertical, positive when the line leans
    right going up the image.  The row is obtained by transporting the line
    direction with the motion-field Jacobian at the reference point (x, y)
    (normalized coordinates) and projecting onto the angle rate.
    """
    alpha, beta, gamma = plane
    # normalized-coordinate direction corresponding to the pixel direction
    # (sin Theta, -cos Theta)
    dx = math.sin(theta) / intr.fx
    dy = -math.cos(theta) / intr.fy
    p = intr.fx * dx  # = sin(theta)
    q = -intr.fy * dy  # = cos(theta)
    row = np.zeros(6)
    basis = np.eye(6)
    for j in range(6):
        a11, a12, a21, a22 = _motion_field_jacobian(x, y, basis[j], alpha, beta, gamma)
        p_dot = intr.fx * (a11 * dx + a12 * dy)
        q_dot = -intr.fy * (a21 * dx + a22 * dy)
        row[j] = (p_dot * q - p * q_dot) / (p * p + q * q)
    return row


def ground_plane_coefficients(rig: CameraRig) -> tuple[float, float, float]:
    """(alpha, beta, gamma) with 1/Z = alpha*x + beta*y + gamma on the ground."""
    n, d = ground_plane_in_camera(rig)
    return (float(n[0] / d), float(n[1] / d), float(n[2] / d))


def interaction_matrix(
    s: FeatureVec, rig: CameraRig, robot: Pose2, intr: CameraIntrinsics
) -> np.ndarray:
    """3x6 interaction matrix for s = [X, Y, Theta] in pixel units.

    Rows map the camera twist (vx, vy, vz, wx, wy, wz) to (Xdot, Ydot,
    Thetadot).  Depth comes from the ground-plane constraint at the feature
    point; raises :class:`DegenerateDepth` at or above the horizon.
    """
    x = (s.X + intr.width / 2.0 - intr.cx) / intr.fx
    y = (s.Y + intr.height / 2.0 - intr.cy) / intr.fy
    alpha, beta, gamma = ground_plane_coefficients(rig)
    inv_z = alpha * x + beta * y + gamma
    if inv_z <= 1e-9:
        raise DegenerateDepth("feature point is at or above the horizon")
    z = 1.0 / inv_z
    l = np.zeros((3, 6))
    point = point_interaction_rows(x, y, z)
    l[0] = intr.fx * point[0]
    l[1] = intr.fy * point[1]
    l[2] = theta_interaction_row(x, y, s.Theta, (alpha, beta, gamma), intr)
    return l


def feature_jacobian(
    s: FeatureVec, rig: CameraRig, robot: Pose2, intr: CameraIntrinsics
) -> np.ndarray:
    """3x2 Jacobian from robot controls (v, omega) to (Xdot, Ydot, Thetadot)."""
    return interaction_matrix(s, rig, robot, intr) @ camera_twist_matrix(rig)


def control_step(
    s: FeatureVec,
    s_star: FeatureVec,
    params: ControllerParams,
    rig: CameraRig,
    robot: Pose2,
    intr: CameraIntrinsics,
    drive_sign: float | None = None,
) -> ControlVec:
    """One feedback step: v is fixed, omega from the pseudo-inverse law.

    ``drive_sign`` overrides the commanded direction of travel in the robot
    frame; by default the robot drives toward the active camera's facing
    direction (+v* for the front camera, -v* for the back camera).
    """
    if drive_sign is None:
        drive_sign = 1.0 if rig.mount == "front" else -1.0
    v_cmd = params.v_star * drive_sign

    jac = feature_jacobian(s, rig, robot, intr)
    weights = np.array([params.weight_x / intr.fx, params.weight_theta])
    j2 = jac[[0, 2], :] * weights[:, None]
    e = weights * np.array([s.X - s_star.X, s.Theta - s_star.Theta])

    j_v, j_w = j2[:, 0], j2[:, 1]
    denom = float(j_w @ j_w)
    if denom < 1e-18:
        raise DegenerateJacobian("angular-velocity Jacobian column is ~0")
    omega = float(-(j_w @ (params.lam * e + j_v * v_cmd)) / denom)
    omega = min(max(omega, -params.omega_max), params.omega_max)
    return ControlVec(v_cmd, omega)
