"""Deterministic closed-loop simulation.

Differential-drive (unicycle) kinematics integrated with exact circular
arcs, a fixed-rate control loop (render both cameras, one navigation step,
hold the command for a control period), optional truncated-Gaussian
actuation noise, and trajectory / event / servo-error recording.

Calibration errors are injected here: the cameras render with the *actual*
tilt while the navigator and controller keep using the assumed rigs, and
row-spacing errors are applied by the harness when it generates the field
(the navigator always plans with its assumed spacing).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .controller import ControllerParams, ControlVec
from .field import Field
from .geometry import CameraRig, Pose2
from .navigator import NavEvent, NavParams, NavState, nav_step, start_navigation
from .perception import desired_feature
from .render import render_view

__all__ = [
    "SimConfig",
    "ScenarioResult",
    "integrate_kinematics",
    "default_start_pose",
    "derive_initial_side",
    "run_scenario",
    "trajectory_csv",
    "servo_csv",
]


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01  # kinematic integration step, s
    control_period: float = 0.1  # one navigation decision per period, s
    max_sim_time: float = 1200.0
    actuation_noise_v: float = 0.0  # m/s std, truncated at 3 sigma
    actuation_noise_omega: float = 0.0  # rad/s std, truncated at 3 sigma
    tilt_error: float = 0.0  # actual minus assumed camera tilt, rad
    delta_error: float = 0.0  # actual minus assumed row spacing, m
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.dt > self.control_period:
            raise ValueError("need 0 < dt <= control_period")
        n = self.control_period / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("control_period must be a multiple of dt")


@dataclass
class TrajectorySample:
    t: float
    pose: Pose2
    control: ControlVec
    phase: str


@dataclass
class ServoSample:
    t: float
    err_x: float  # pixels; nan when no feature was available
    err_theta: float  # radians; nan when no feature was available
    primary: str
    phase: str


@dataclass
class ScenarioResult:
    samples: list[TrajectorySample]
    events: list[NavEvent]
    servo: list[ServoSample]
    timed_out: bool
    final_state: NavState


def integrate_kinematics(pose: Pose2, u, dt: float) -> Pose2:
    """Exact unicycle integration over one step.

    Straight-line update for negligible turn rates, otherwise the closed
    -form arc of radius v/omega.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = u.v if hasattr(u, "v") else float(u[0])
    omega = u.omega if hasattr(u, "omega") else float(u[1])
    if abs(omega) < 1e-9:
        return Pose2(
            pose.x + v * dt * math.cos(pose.theta),
            pose.y + v * dt * math.sin(pose.theta),
            pose.theta,
        )
    theta1 = pose.theta + omega * dt
    r = v / omega
    return Pose2(
        pose.x + r * (math.sin(theta1) - math.sin(pose.theta)),
        pose.y - r * (math.cos(theta1) - math.cos(pose.theta)),
        theta1,
    )


def default_start_pose(field: Field, standoff: float = 1.0) -> Pose2:
    """One meter before the first plant of the first row, aligned with it."""
    row = field.rows[0]
    line = row.centerline
    tangent = line[1] - line[0]
    tangent = tangent / np.hypot(*tangent)
    if row.plants:
        first = np.array([row.plants[0].position.x, row.plants[0].position.y])
    else:
        first = line[0]
    start = first - standoff * tangent
    return Pose2(float(start[0]), float(start[1]), float(math.atan2(tangent[1], tangent[0])))


def derive_initial_side(field: Field, start: Pose2) -> str:
    """Image side of the first window shift for a serpentine traversal.

    The first transition happens on the back camera after the robot exits
    row one driving forward; for the back camera, image-left is
    robot-right, so the side flips relative to the world side of row two.
    """
    if len(field.rows) < 2:
        return "left"
    tangent = np.array([math.cos(start.theta), math.sin(start.theta)])
    to_next = field.rows[1].centerline[0] - field.rows[0].centerline[0]
    world_left = float(tangent[0] * to_next[1] - tangent[1] * to_next[0]) > 0
    return "right" if world_left else "left"


def run_scenario(
    field: Field,
    rig_front: CameraRig,
    rig_back: CameraRig,
    cparams: ControllerParams,
    nparams: NavParams,
    sim: SimConfig,
    start_pose: Pose2 | None = None,
    initial_side: str | None = None,
) -> ScenarioResult:
    """Run one closed-loop scenario to completion or timeout."""
    intr = rig_front.intrinsics
    render_front = rig_front.with_tilt_error(sim.tilt_error)
    render_back = rig_back.with_tilt_error(sim.tilt_error)
    pose = start_pose if start_pose is not None else default_start_pose(field)
    side = initial_side if initial_side is not None else derive_initial_side(field, pose)
    state = start_navigation(rig_front, intr, side, nparams.resolved_window_width(intr))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(sim.seed)))
    s_star = desired_feature(intr)

    substeps = int(round(sim.control_period / sim.dt))
    samples = [TrajectorySample(0.0, pose, ControlVec(0.0, 0.0), state.phase)]
    servo: list[ServoSample] = []
    events: list[NavEvent] = []
    t = 0.0

    while state.phase != "done" and t < sim.max_sim_time - 1e-9:
        front_img = render_view(render_front, pose, field)
        back_img = render_view(render_back, pose, field)
        state, u, evs = nav_step(
            state, front_img, back_img, rig_front, rig_back, pose, cparams, nparams, t
        )
        events.extend(evs)
        if state.phase == "done":
            samples.append(TrajectorySample(t, pose, ControlVec(0.0, 0.0), "done"))
            break

        v_cmd, w_cmd = u.v, u.omega
        if sim.actuation_noise_v > 0.0:
            s = sim.actuation_noise_v
            v_cmd += float(np.clip(rng.normal(0.0, s), -3.0 * s, 3.0 * s))
        if sim.actuation_noise_omega > 0.0:
            s = sim.actuation_noise_omega
            w_cmd += float(np.clip(rng.normal(0.0, s), -3.0 * s, 3.0 * s))
        applied = ControlVec(v_cmd, w_cmd)
        for _ in range(substeps):
            pose = integrate_kinematics(pose, applied, sim.dt)
        t += sim.control_period

        samples.append(TrajectorySample(t, pose, applied, state.phase))
        if state.last_feature is not None:
            servo.append(
                ServoSample(
                    t,
                    state.last_feature.X - s_star.X,
                    state.last_feature.Theta - s_star.Theta,
                    state.primary_cam,
                    state.phase,
                )
            )
        else:
            servo.append(ServoSample(t, math.nan, math.nan, state.primary_cam, state.phase))

    timed_out = state.phase != "done"
    return ScenarioResult(samples, events, servo, timed_out, state)


def trajectory_csv(result: ScenarioResult) -> str:
    out = io.StringIO()
    out.write("t,x,y,theta,v,omega,phase\n")
    for s in result.samples:
        out.write(
            f"{s.t:.6f},{s.pose.x:.9f},{s.pose.y:.9f},{s.pose.theta:.9f},"
            f"{s.control.v:.9f},{s.control.omega:.9f},{s.phase}\n"
        )
    return out.getvalue()


def servo_csv(result: ScenarioResult) -> str:
    out = io.StringIO()
    out.write("t,err_x_px,err_theta_rad,primary,phase\n")
    for s in result.servo:
        out.write(f"{s.t:.6f},{s.err_x:.6f},{s.err_theta:.9f},{s.primary},{s.phase}\n")
    return out.getvalue()
