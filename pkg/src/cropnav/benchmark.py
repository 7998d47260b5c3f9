"""Timing comparison of the compiled and pure-Python kernel lanes.

Measures the per-frame cost of the full image pipeline (render, vegetation
mask, component extraction) on a standard scene with each backend.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels
from ._kernels import _pure
from .field import FieldSpec, generate_field
from .geometry import Pose2, camera_pair
from .perception import detect_crops
from .render import render_view

__all__ = ["run_benchmark"]


def _pipeline_ms(field, rigs, poses, impl, frames) -> float:
    saved = (_kernels.exg_mask, _kernels.label_stats, _kernels.fill_polygons)
    _kernels.exg_mask = impl.exg_mask
    _kernels.label_stats = impl.label_stats
    _kernels.fill_polygons = impl.fill_polygons
    try:
        # warmup
        render_view(rigs[0], poses[0], field)
        t0 = time.perf_counter()
        n = 0
        for i in range(frames):
            pose = poses[i % len(poses)]
            for rig in rigs:
                img = render_view(rig, pose, field)
                detect_crops(_kernels.exg_mask(img, 40), 4)
                n += 1
        return 1000.0 * (time.perf_counter() - t0) / n
    finally:
        _kernels.exg_mask, _kernels.label_stats, _kernels.fill_polygons = saved


def run_benchmark(frames: int = 120) -> dict:
    field = generate_field(FieldSpec(shape="straight", row_count=8, row_length=20.0, seed=7))
    rigs = camera_pair()
    poses = [Pose2(1.0 + 0.15 * i, 0.01 * (i % 5), 0.01 * (i % 3)) for i in range(40)]

    results = {}
    try:
        from ._kernels import _core

        results["compiled"] = _pipeline_ms(field, rigs, poses, _core, frames)
    except ImportError:
        print("compiled kernels unavailable; benchmarking the Python lane only")
    results["python"] = _pipeline_ms(field, rigs, poses, _pure, max(frames // 8, 8))

    print(f"{'backend':<10} {'ms/frame':>9}")
    for name, ms in results.items():
        print(f"{name:<10} {ms:9.3f}")
    if "compiled" in results:
        print(f"speedup    {results['python'] / results['compiled']:8.1f}x")
    return results
