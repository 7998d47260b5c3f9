"""Parity between the compiled kernel lane and the numpy/scipy fallback."""

import math

import numpy as np
import pytest

from cropnav._kernels import _pure, active_backend

_core = pytest.importorskip(
    "cropnav._kernels._core", reason="compiled kernels not built"
)


def random_polygons(rng, n):
    verts = []
    counts = []
    for _ in range(n):
        k = int(rng.integers(3, 9))
        cx, cy = rng.uniform(-20, 340), rng.uniform(-20, 260)
        radius = rng.uniform(1, 25)
        ang = np.sort(rng.uniform(0, 2 * math.pi, k))
        verts.append(np.column_stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)]))
        counts.append(k)
    return (
        np.ascontiguousarray(np.vstack(verts), dtype=np.float64),
        np.asarray(counts, dtype=np.int32),
    )


def test_exg_parity():
    rng = np.random.default_rng(0)
    for thr in (-50, 0, 40, 200):
        img = rng.integers(0, 256, size=(60, 80, 3), dtype=np.uint8)
        np.testing.assert_array_equal(_core.exg_mask(img, thr), _pure.exg_mask(img, thr))


def test_label_stats_parity():
    rng = np.random.default_rng(1)
    for density in (0.1, 0.35, 0.6, 0.9):
        mask = np.ascontiguousarray((rng.random((50, 70)) < density).astype(np.uint8))
        a_areas, a_cu, a_cv = _core.label_stats(mask)
        b_areas, b_cu, b_cv = _pure.label_stats(mask)
        np.testing.assert_array_equal(a_areas, b_areas)
        np.testing.assert_allclose(a_cu, b_cu, atol=1e-12)
        np.testing.assert_allclose(a_cv, b_cv, atol=1e-12)


def test_label_stats_empty_and_full():
    for mask in (np.zeros((5, 5), np.uint8), np.ones((5, 5), np.uint8)):
        mask = np.ascontiguousarray(mask)
        a = _core.label_stats(mask)
        b = _pure.label_stats(mask)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)


def test_fill_polygons_parity():
    rng = np.random.default_rng(2)
    for trial in range(10):
        verts, counts = random_polygons(rng, 12)
        colors = np.ascontiguousarray(
            rng.integers(0, 256, size=(len(counts), 3), dtype=np.uint8)
        )
        img_a = np.zeros((240, 320, 3), dtype=np.uint8)
        img_b = img_a.copy()
        _core.fill_polygons(img_a, verts, counts, colors)
        _pure.fill_polygons(img_b, verts, counts, colors)
        assert img_a.tobytes() == img_b.tobytes()


def test_render_parity_end_to_end(monkeypatch):
    """A full rendered frame is bit-identical across lanes."""
    from cropnav import render
    from cropnav.field import FieldSpec, generate_field
    from cropnav.geometry import CameraRig, Pose2, default_intrinsics

    field = generate_field(FieldSpec(seed=3, row_count=4, row_length=5.0))
    rig = CameraRig("front", math.radians(75), 0.45, 0.3, default_intrinsics())
    robot = Pose2(0.3, 0.5, 0.1)

    monkeypatch.setattr(render._kernels, "fill_polygons", _core.fill_polygons)
    img_core = render.render_view(rig, robot, field)
    monkeypatch.setattr(render._kernels, "fill_polygons", _pure.fill_polygons)
    img_pure = render.render_view(rig, robot, field)
    assert img_core.tobytes() == img_pure.tobytes()


def test_active_backend_reports_a_lane():
    assert active_backend() in ("compiled", "python")
