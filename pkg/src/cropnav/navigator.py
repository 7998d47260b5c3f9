"""Row-switching navigation state machine.

Per control frame the scheme: detects crops in the primary camera, keeps
the ones inside the sliding window, and

* follows the tracked row while the window has crops,
* when the window empties but the secondary camera still sees crops,
  switches cameras and re-initializes the window (row exit),
* when both cameras see nothing, shifts the window one row spacing toward
  the next row (row entry),
* stops when, after a shift, the window stays empty past a patience
  period.

Two robustness refinements over the bare scheme: window emptiness is
debounced over a few consecutive frames (plant gaps make single-frame
dropouts common), and only detections below a near-field cutoff row take
part in tracking.  The cutoff is the image row at which two rows one
spacing apart are still a full window width apart in the image; beyond it
neighboring rows blur together near the vanishing point and cannot be
told apart by a window, and it is this bounded look-behind that lets the
exit terminate within a small maneuvering space.  Both the cutoff and the
window geometry derive from the camera tilt and the expected row spacing.

Drive direction: the robot drives toward the primary camera's facing
while following or entering a row and away from it while exiting, which
produces the serpentine traversal with no point turns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .controller import (
    ControllerParams,
    ControlVec,
    DegenerateDepth,
    DegenerateJacobian,
    control_step,
    ground_plane_coefficients,
)
from .geometry import CameraIntrinsics, CameraRig, Pose2
from .perception import (
    DEFAULT_EXG_THRESHOLD,
    DEFAULT_MIN_BLOB_AREA,
    DEFAULT_WINDOW_FRACTION,
    CropDetection,
    FeatureVec,
    InsufficientPoints,
    SlidingWindow,
    crops_below,
    crops_in_window,
    desired_feature,
    detect_crops,
    exg_mask,
    feature_from_fit,
    fit_row_line,
    initialize_window,
    shift_window,
    update_window,
)

__all__ = [
    "NavParams",
    "NavState",
    "NavEvent",
    "start_navigation",
    "nav_core",
    "nav_step",
    "turn_bookkeeping",
    "tracking_cutoff_row",
]

PHASES = ("following", "exiting", "entering", "done")
EVENT_KINDS = (
    "row_end_reached",
    "camera_switched",
    "window_shifted",
    "row_entered",
    "navigation_done",
)


@dataclass(frozen=True)
class NavParams:
    delta: float = 0.5  # assumed row spacing used for the window shift
    window_width: float | None = None  # None: 0.35 * image width
    debounce_frames: int = 3  # consecutive empty frames before reacting
    done_patience_frames: int = 15  # empty frames after a shift before stopping
    initial_side: str = "left"  # image side of the first window shift
    max_track_depth: float | None = None  # None: fx * delta / window_width
    exg_threshold: int = DEFAULT_EXG_THRESHOLD
    min_blob_area: int = DEFAULT_MIN_BLOB_AREA

    def resolved_window_width(self, intr: CameraIntrinsics) -> float:
        if self.window_width is not None:
            return float(self.window_width)
        return DEFAULT_WINDOW_FRACTION * intr.width

    def resolved_track_depth(self, intr: CameraIntrinsics) -> float:
        if self.max_track_depth is not None:
            return float(self.max_track_depth)
        return intr.fx * self.delta / self.resolved_window_width(intr)


@dataclass(frozen=True)
class NavEvent:
    kind: str
    sim_time: float


@dataclass(frozen=True)
class NavState:
    primary_cam: str  # "front" | "back"
    window: SlidingWindow
    phase: str
    next_row_side: str  # image side ("left" | "right") of the next row
    rows_completed: int
    empty_streak: int = 0
    frames_since_shift: int = 0
    last_feature: FeatureVec | None = None


def tracking_cutoff_row(rig: CameraRig, params: NavParams) -> float:
    """Image row above which detections are too far away to track.

    Computed from the assumed geometry: the ground point on the camera's
    vertical midplane at the maximum tracking depth, projected back into
    the image.  Detections with centroids above this row are ignored.
    """
    intr = rig.intrinsics
    z_max = params.resolved_track_depth(intr)
    alpha, beta, gamma = ground_plane_coefficients(rig)
    y = (1.0 / z_max - gamma) / beta
    v = intr.cy + intr.fy * y
    return float(min(max(v, 0.0), intr.height - 1.0))


def start_navigation(
    rig_front: CameraRig,
    intr: CameraIntrinsics,
    initial_side: str = "left",
    window_width: float | None = None,
) -> NavState:
    """Initial state: front camera primary, window centered, following."""
    if initial_side not in ("left", "right"):
        raise ValueError(f"initial_side must be 'left' or 'right', got {initial_side!r}")
    return NavState(
        primary_cam="front",
        window=initialize_window(intr, window_width),
        phase="following",
        next_row_side=initial_side,
        rows_completed=1,
        empty_streak=0,
        frames_since_shift=0,
    )


def turn_bookkeeping(state: NavState) -> NavState:
    """Account for a completed row transition: one more row started, and
    the following transition goes to the opposite side (serpentine)."""
    flipped = "left" if state.next_row_side == "right" else "right"
    return replace(state, rows_completed=state.rows_completed + 1, next_row_side=flipped)


def _drive_sign(primary: str, phase: str) -> float:
    facing = 1.0 if primary == "front" else -1.0
    return facing if phase in ("following", "entering") else -facing


def nav_core(
    state: NavState,
    dets_front: list[CropDetection],
    dets_back: list[CropDetection],
    rig_front: CameraRig,
    rig_back: CameraRig,
    robot: Pose2,
    cparams: ControllerParams,
    nparams: NavParams,
    sim_time: float = 0.0,
) -> tuple[NavState, ControlVec, list[NavEvent]]:
    """One navigation decision from already-extracted crop detections."""
    if state.phase == "done":
        return state, ControlVec(0.0, 0.0), []

    intr = rig_front.intrinsics
    v_min = tracking_cutoff_row(rig_front, nparams)
    near = {
        "front": crops_below(dets_front, v_min),
        "back": crops_below(dets_back, v_min),
    }
    rigs = {"front": rig_front, "back": rig_back}
    events: list[NavEvent] = []

    primary = state.primary_cam
    window = state.window
    phase = state.phase
    next_side = state.next_row_side
    rows_completed = state.rows_completed
    frames_since_shift = state.frames_since_shift + (1 if phase == "entering" else 0)

    crops_w = crops_in_window(near[primary], window)
    streak = 0 if crops_w else state.empty_streak + 1

    if crops_w and phase == "entering":
        # locked onto the next row
        phase = "following"
        rows_completed += 1
        next_side = "left" if next_side == "right" else "right"
        events.append(NavEvent("row_entered", sim_time))
    elif not crops_w and streak >= nparams.debounce_frames:
        secondary = "back" if primary == "front" else "front"
        if near[secondary]:
            # row exit: switch cameras, restart the window at the center
            if phase == "following":
                events.append(NavEvent("row_end_reached", sim_time))
            primary = secondary
            window = initialize_window(intr, nparams.resolved_window_width(intr))
            phase = "exiting"
            events.append(NavEvent("camera_switched", sim_time))
            crops_w = crops_in_window(near[primary], window)
            streak = 0
        elif phase != "entering":
            # both cameras blind: shift the window toward the next row.
            # New crops enter the tracked band at the cutoff row as the
            # robot drives back in, so the shift is anchored there.
            v_ref = v_min + 5.0
            window = shift_window(
                window, rigs[primary], robot, nparams.delta, next_side, v_ref=v_ref
            )
            phase = "entering"
            frames_since_shift = 0
            streak = 0
            events.append(NavEvent("window_shifted", sim_time))
        elif frames_since_shift >= nparams.done_patience_frames:
            # shifted into emptiness and nothing appeared: end of the field
            phase = "done"
            events.append(NavEvent("navigation_done", sim_time))
            new_state = replace(
                state,
                primary_cam=primary,
                window=window,
                phase=phase,
                next_row_side=next_side,
                rows_completed=rows_completed,
                empty_streak=streak,
                frames_since_shift=frames_since_shift,
                last_feature=None,
            )
            return new_state, ControlVec(0.0, 0.0), events

    # --- control ---------------------------------------------------------
    sign = _drive_sign(primary, phase)
    rig = rigs[primary]
    feature: FeatureVec | None = None
    control = ControlVec(cparams.v_star * sign, 0.0)
    if crops_w:
        try:
            if len(crops_w) >= 2:
                fit = fit_row_line(crops_w)
                feature = feature_from_fit(fit, crops_w, intr)
            else:
                c = crops_w[0].centroid
                feature = FeatureVec(c.u - intr.width / 2.0, c.v - intr.height / 2.0, 0.0)
            control = control_step(
                feature, desired_feature(intr), cparams, rig, robot, intr, drive_sign=sign
            )
        except (DegenerateJacobian, DegenerateDepth, InsufficientPoints):
            feature = None
            control = ControlVec(cparams.v_star * sign, 0.0)
        window = update_window(window, crops_w)

    new_state = NavState(
        primary_cam=primary,
        window=window,
        phase=phase,
        next_row_side=next_side,
        rows_completed=rows_completed,
        empty_streak=streak,
        frames_since_shift=frames_since_shift,
        last_feature=feature,
    )
    return new_state, control, events


def nav_step(
    state: NavState,
    front_img: np.ndarray,
    back_img: np.ndarray,
    rig_front: CameraRig,
    rig_back: CameraRig,
    robot: Pose2,
    cparams: ControllerParams,
    nparams: NavParams,
    sim_time: float = 0.0,
) -> tuple[NavState, ControlVec, list[NavEvent]]:
    """Full perception + navigation step from the two camera images."""
    dets_front = detect_crops(
        exg_mask(front_img, nparams.exg_threshold), nparams.min_blob_area
    )
    dets_back = detect_crops(
        exg_mask(back_img, nparams.exg_threshold), nparams.min_blob_area
    )
    return nav_core(
        state, dets_front, dets_back, rig_front, rig_back, robot, cparams, nparams, sim_time
    )
