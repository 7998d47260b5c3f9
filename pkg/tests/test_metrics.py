"""Coverage metrics tests on synthetic trajectories with known answers."""

import math

import numpy as np
import pytest

from cropnav.controller import ControlVec
from cropnav.field import FieldSpec, generate_field
from cropnav.geometry import Pose2
from cropnav.metrics import CoverageReport, coverage_report, sweep_summary
from cropnav.navigator import NavState
from cropnav.perception import SlidingWindow
from cropnav.simloop import ScenarioResult, TrajectorySample


def grid_field(rows=4, length=6.0, seed=2):
    return generate_field(
        FieldSpec(
            shape="straight",
            row_count=rows,
            row_length=length,
            spacing_std=0.0,
            lateral_jitter_std=0.0,
            seed=seed,
        )
    )


def dummy_state():
    return NavState(
        primary_cam="front",
        window=SlidingWindow(160.0, 112.0, 320),
        phase="done",
        next_row_side="left",
        rows_completed=0,
    )


def make_result(points_phases):
    samples = [
        TrajectorySample(0.1 * i, Pose2(x, y, 0.0), ControlVec(0.4, 0.0), phase)
        for i, (x, y, phase) in enumerate(points_phases)
    ]
    return ScenarioResult(samples, [], [], False, dummy_state())


def serpentine_over(field, step=0.02, overshoot=0.0):
    """Ideal trajectory tracing every centerline exactly, with optional
    longitudinal overshoot beyond the row ends during transitions."""
    pts = []
    for k, row in enumerate(field.rows):
        line = row.centerline if k % 2 == 0 else row.centerline[::-1]
        n = max(int(np.hypot(*(line[-1] - line[0])) / step), 2)
        xs = np.linspace(line[0, 0], line[-1, 0], n)
        ys = np.linspace(line[0, 1], line[-1, 1], n)
        pts += [(x, y, "following") for x, y in zip(xs, ys)]
        if k < len(field.rows) - 1:
            end = line[-1]
            nxt = field.rows[k + 1]
            target = nxt.centerline[-1] if k % 2 == 0 else nxt.centerline[0]
            sgn = 1.0 if k % 2 == 0 else -1.0
            mid_y = (end[1] + target[1]) / 2.0
            pts += [
                (end[0] + sgn * overshoot, end[1], "exiting"),
                (end[0] + sgn * overshoot, mid_y, "exiting"),
                (target[0] + sgn * overshoot, mid_y, "entering"),
                (target[0] + sgn * overshoot, target[1], "entering"),
            ]
    return make_result(pts)


def test_perfect_traversal_scores_perfectly():
    field = grid_field()
    rep = coverage_report(field, serpentine_over(field, overshoot=0.4))
    assert rep.avg_row_distance_cm == pytest.approx(0.0, abs=1e-9)
    assert rep.std_row_distance_cm == pytest.approx(0.0, abs=1e-9)
    assert rep.missed_crops_per_row == 0.0
    assert rep.visited_rows_pct == 100.0


def test_maneuvering_space_measures_overshoot():
    field = grid_field()
    for overshoot in (0.5, 1.37):
        rep = coverage_report(field, serpentine_over(field, overshoot=overshoot))
        # the end line sits at the outermost plant; the trajectory overshoots
        # relative to the centerline end, which the last plant precedes
        assert rep.maneuvering_space_m == pytest.approx(overshoot, abs=0.16)
        assert rep.maneuvering_space_m >= overshoot - 1e-9


def test_skipping_one_row_of_ten():
    field = grid_field(rows=10)
    result = serpentine_over(field, overshoot=0.3)
    # shortcut row 5: ride 15 cm off its centerline, missing every plant
    y5 = field.rows[5].centerline[0, 1]
    shifted = []
    for s in result.samples:
        if s.phase == "following" and abs(s.pose.y - y5) < 0.1:
            s = TrajectorySample(s.t, Pose2(s.pose.x, s.pose.y + 0.15, 0.0), s.control, s.phase)
        shifted.append(s)
    rep = coverage_report(field, ScenarioResult(shifted, [], [], False, dummy_state()))
    assert rep.visited_rows_pct == pytest.approx(90.0)
    assert rep.missed_per_row[5] == len(field.rows[5].plants)


def test_adding_samples_never_increases_misses():
    field = grid_field()
    full = serpentine_over(field)
    half = ScenarioResult(full.samples[::2], [], [], False, dummy_state())
    rep_full = coverage_report(field, full)
    rep_half = coverage_report(field, half)
    for a, b in zip(rep_full.missed_per_row, rep_half.missed_per_row):
        assert a <= b


def test_distance_stats_use_tracked_row_only():
    field = grid_field(rows=2)
    # follow row 0 with a constant 3 cm offset
    line = field.rows[0].centerline
    pts = [(x, y + 0.03, "following") for x, y in line]
    rep = coverage_report(field, make_result(pts))
    assert rep.avg_row_distance_cm == pytest.approx(3.0, abs=0.01)
    assert rep.std_row_distance_cm == pytest.approx(0.0, abs=0.05)


def test_timed_out_flag_propagates():
    field = grid_field(rows=2)
    res = serpentine_over(field)
    res.timed_out = True
    assert coverage_report(field, res).timed_out


def report_with_pct(pct):
    return CoverageReport(0.0, 0.0, 0.0, pct, 0.0, (0,))


def test_sweep_summary_all_full_coverage():
    runs = [(p, report_with_pct(100.0)) for p in (1.0, 2.0, 3.0)]
    curve = sweep_summary(runs)
    assert curve.full_coverage_interval == (1.0, 3.0)
    assert curve.params == (1.0, 2.0, 3.0)


def test_sweep_summary_single_run():
    curve = sweep_summary([(5.0, report_with_pct(100.0))])
    assert curve.full_coverage_interval == (5.0, 5.0)
    curve = sweep_summary([(5.0, report_with_pct(80.0))])
    assert curve.full_coverage_interval is None


def test_sweep_summary_contiguous_interval():
    pcts = {50: 60.0, 55: 100.0, 60: 100.0, 65: 100.0, 70: 80.0, 75: 100.0}
    runs = [(float(p), report_with_pct(c)) for p, c in pcts.items()]
    curve = sweep_summary(runs)
    assert curve.full_coverage_interval == (55.0, 65.0)
    # order of input must not matter
    curve2 = sweep_summary(list(reversed(runs)))
    assert curve2.full_coverage_interval == (55.0, 65.0)


def test_sweep_csv_shape():
    runs = [(1.0, report_with_pct(100.0)), (2.0, report_with_pct(50.0))]
    text = sweep_summary(runs).to_csv("tilt_error_deg")
    lines = text.strip().split("\n")
    assert lines[0] == "tilt_error_deg,visited_rows_pct"
    assert len(lines) == 3
