"""Controller tests: interaction matrix structure, the feedback law, and
Jacobian correctness against finite differences through render+perception."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cropnav.controller import (
    ControllerParams,
    DegenerateDepth,
    DegenerateJacobian,
    control_step,
    feature_jacobian,
    interaction_matrix,
    point_interaction_rows,
)
from cropnav.field import FieldSpec, generate_field
from cropnav.geometry import CameraRig, Pose2, camera_pair, default_intrinsics
from cropnav.perception import FeatureVec, desired_feature

from oracles import fd_feature_rate, pseudo_inverse_omega


def default_rigs():
    return camera_pair()


def one_row_field(seed=0, length=6.0):
    return generate_field(
        FieldSpec(shape="straight", row_count=1, row_length=length, seed=seed)
    )


def fd_probe_field(seed=0, length=6.0):
    from oracles import fd_probe_spec

    return generate_field(fd_probe_spec(seed, length))


# ---------------------------------------------------------------------------
# interaction matrix structure


def test_point_matrix_on_optical_axis():
    for z in (0.5, 1.0, 2.5):
        l = point_interaction_rows(0.0, 0.0, z)
        assert l[0, 0] == pytest.approx(-1.0 / z)
        assert l[1, 1] == pytest.approx(-1.0 / z)
        # x-y coupling terms vanish at the principal point
        assert l[0, 3] == 0.0 and l[1, 4] == 0.0 and l[0, 5] == 0.0 and l[1, 5] == 0.0


def test_doubling_depth_halves_translational_entries():
    a = point_interaction_rows(0.2, -0.1, 1.0)
    b = point_interaction_rows(0.2, -0.1, 2.0)
    np.testing.assert_allclose(b[:, :3], a[:, :3] / 2.0, atol=1e-15)
    np.testing.assert_allclose(b[:, 3:], a[:, 3:], atol=1e-15)


def test_interaction_matrix_rejects_horizon_feature():
    front, _ = default_rigs()
    intr = front.intrinsics
    # a feature high in the image is above the horizon for a 75 deg tilt
    with pytest.raises(DegenerateDepth):
        interaction_matrix(FeatureVec(0.0, -intr.height / 2 + 1, 0.0), front, Pose2(), intr)


# ---------------------------------------------------------------------------
# the control law


def test_control_law_matches_generic_pseudo_inverse():
    front, back = default_rigs()
    intr = front.intrinsics
    rng = np.random.default_rng(5)
    params = ControllerParams(lam=1.3, v_star=0.4, omega_max=1e9)
    s_star = desired_feature(intr)
    for rig, sign in ((front, 1.0), (back, -1.0)):
        for _ in range(20):
            s = FeatureVec(rng.uniform(-80, 80), rng.uniform(20, 110), rng.uniform(-0.5, 0.5))
            jac = feature_jacobian(s, rig, Pose2(), intr)
            w = np.array([params.weight_x / intr.fx, params.weight_theta])
            j2 = jac[[0, 2], :] * w[:, None]
            e = w * np.array([s.X - s_star.X, s.Theta - s_star.Theta])
            expected = pseudo_inverse_omega(j2[:, 0], j2[:, 1], params.lam, e, params.v_star * sign)
            got = control_step(s, s_star, params, rig, Pose2(), intr)
            assert got.v == pytest.approx(params.v_star * sign)
            assert got.omega == pytest.approx(expected, abs=1e-12)


def test_lambda_linearity_with_zero_speed():
    front, _ = default_rigs()
    intr = front.intrinsics
    s = FeatureVec(40.0, 60.0, 0.2)
    s_star = desired_feature(intr)
    base = ControllerParams(lam=0.7, v_star=0.0, omega_max=1e9)
    doubled = ControllerParams(lam=1.4, v_star=0.0, omega_max=1e9)
    w1 = control_step(s, s_star, base, front, Pose2(), intr).omega
    w2 = control_step(s, s_star, doubled, front, Pose2(), intr).omega
    assert w2 == pytest.approx(2.0 * w1, rel=1e-12)


def test_symmetric_pose_gives_zero_omega():
    """Centered and aligned on a straight row: e = 0 and the feed-forward
    term vanishes by symmetry, so omega = 0."""
    front, back = default_rigs()
    intr = front.intrinsics
    params = ControllerParams()
    for rig in (front, back):
        s = FeatureVec(0.0, 45.0, 0.0)
        out = control_step(s, desired_feature(intr), params, rig, Pose2(), intr)
        assert abs(out.omega) < 1e-6


@settings(max_examples=100, deadline=None)
@given(
    x=st.floats(-500, 500),
    y=st.floats(0, 119),
    theta=st.floats(-1.4, 1.4),
    lam=st.floats(0.01, 50),
)
def test_omega_always_clamped(x, y, theta, lam):
    front, _ = default_rigs()
    intr = front.intrinsics
    params = ControllerParams(lam=lam, v_star=0.4, omega_max=1.5)
    out = control_step(FeatureVec(x, y, theta), desired_feature(intr), params, front, Pose2(), intr)
    assert abs(out.omega) <= 1.5 + 1e-12


def test_degenerate_jacobian_raises():
    front, _ = default_rigs()
    intr = front.intrinsics
    params = ControllerParams(weight_x=0.0, weight_theta=0.0)
    with pytest.raises(DegenerateJacobian):
        control_step(FeatureVec(10.0, 40.0, 0.1), desired_feature(intr), params, front, Pose2(), intr)


def test_back_camera_reverses_drive_and_exit_override():
    _, back = default_rigs()
    intr = back.intrinsics
    params = ControllerParams()
    s = FeatureVec(5.0, 40.0, 0.05)
    assert control_step(s, desired_feature(intr), params, back, Pose2(), intr).v == pytest.approx(-0.4)
    forced = control_step(s, desired_feature(intr), params, back, Pose2(), intr, drive_sign=1.0)
    assert forced.v == pytest.approx(0.4)


# ---------------------------------------------------------------------------
# Jacobian vs finite differences through render + perception


@pytest.mark.parametrize("seed", range(6))
def test_jacobian_matches_rendered_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    front, _ = default_rigs()
    field = fd_probe_field(seed=seed)
    robot = Pose2(
        rng.uniform(0.5, 3.5),
        rng.uniform(-0.06, 0.06),
        rng.uniform(-0.12, 0.12),
    )
    checked = 0
    for u in ((0.4, 0.0), (0.0, 0.6), (0.4, -0.5)):
        res = fd_feature_rate(front, robot, field, u)
        if res is None:
            continue
        rates, feature, intr_hi, rig_hi = res
        jac = feature_jacobian(feature, rig_hi, robot, intr_hi)
        pred = jac @ np.array(u)
        # X/Y floor: 0.5 px/s in base pixels, scaled by the supersampling;
        # Theta floor: finite-difference noise of the fitted angle
        ss = intr_hi.width / front.intrinsics.width
        floors = np.array([0.5 * ss, 0.5 * ss, 0.02])
        for i in range(3):
            err = abs(rates[i] - pred[i])
            assert err <= max(0.05 * abs(pred[i]), floors[i]), (
                f"component {i}: fd={rates[i]:.4f} analytic={pred[i]:.4f} u={u}"
            )
        checked += 1
    assert checked >= 2


def test_one_step_reduces_lateral_error():
    """Offset to the right of the row: the commanded turn reduces |X|."""
    from cropnav.perception import crops_below, detect_crops, exg_mask, feature_from_fit, fit_row_line
    from cropnav.render import render_view
    from cropnav.simloop import integrate_kinematics

    front, _ = default_rigs()
    intr = front.intrinsics
    field = one_row_field(seed=3)
    params = ControllerParams()

    def measure(q):
        dets = crops_below(detect_crops(exg_mask(render_view(front, q, field))), 132.0)
        fit = fit_row_line(dets)
        return feature_from_fit(fit, dets, intr)

    robot = Pose2(1.0, -0.10, 0.0)  # right of the row (row runs along +x at y=0)
    s = measure(robot)
    assert s.X < 0  # row appears left of image center
    out = control_step(s, desired_feature(intr), params, front, robot, intr)
    assert out.omega > 0  # steer left, toward the row
    q = robot
    for _ in range(5):
        q = integrate_kinematics(q, out, 0.1)
    assert abs(measure(q).X) < abs(s.X)
