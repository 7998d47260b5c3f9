"""Top-down SVG rendering of a field and a robot trajectory.

Plants are dots, centerlines faint lines, and the trajectory is drawn as
polyline stretches colored by navigation phase.
"""

from __future__ import annotations

import numpy as np

from .field import Field
from .io import atomic_write_text
from .simloop import ScenarioResult

__all__ = ["scenario_svg", "write_scenario_svg"]

PHASE_COLORS = {
    "following": "#1f77b4",
    "exiting": "#ff7f0e",
    "entering": "#d62728",
    "done": "#2ca02c",
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def scenario_svg(field: Field, result: ScenarioResult, px_per_meter: float = 40.0) -> str:
    pts = np.array([[s.pose.x, s.pose.y] for s in result.samples])
    all_x = [pts[:, 0]]
    all_y = [pts[:, 1]]
    for row in field.rows:
        all_x.append(row.centerline[:, 0])
        all_y.append(row.centerline[:, 1])
    xs = np.concatenate(all_x)
    ys = np.concatenate(all_y)
    pad = 1.0
    x0, x1 = xs.min() - pad, xs.max() + pad
    y0, y1 = ys.min() - pad, ys.max() + pad
    width = (x1 - x0) * px_per_meter
    height = (y1 - y0) * px_per_meter

    def sx(x):
        return (x - x0) * px_per_meter

    def sy(y):
        # flip so +y points up in the figure
        return height - (y - y0) * px_per_meter

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.2f} {height:.2f}">',
        f'<rect width="{width:.2f}" height="{height:.2f}" fill="#f7f3ea"/>',
    ]
    for row in field.rows:
        path = " ".join(
            f"{'M' if i == 0 else 'L'}{_fmt(sx(p[0]))},{_fmt(sy(p[1]))}"
            for i, p in enumerate(row.centerline[:: max(len(row.centerline) // 80, 1)])
        )
        parts.append(f'<path d="{path}" stroke="#c8b89a" stroke-width="1" fill="none"/>')
    for row in field.rows:
        for p in row.plants:
            r = max(p.canopy_radius * px_per_meter, 1.0)
            parts.append(
                f'<circle cx="{_fmt(sx(p.position.x))}" cy="{_fmt(sy(p.position.y))}" '
                f'r="{_fmt(r)}" fill="#3c9a32"/>'
            )
    # trajectory stretches per phase
    i = 0
    n = len(result.samples)
    while i < n - 1:
        phase = result.samples[i + 1].phase
        j = i + 1
        while j + 1 < n and result.samples[j + 1].phase == phase:
            j += 1
        seg = pts[i : j + 1]
        path = " ".join(
            f"{'M' if k == 0 else 'L'}{_fmt(sx(p[0]))},{_fmt(sy(p[1]))}"
            for k, p in enumerate(seg)
        )
        color = PHASE_COLORS.get(phase, "#000000")
        parts.append(f'<path d="{path}" stroke="{color}" stroke-width="2" fill="none"/>')
        i = j
    # start marker and legend
    parts.append(
        f'<circle cx="{_fmt(sx(pts[0, 0]))}" cy="{_fmt(sy(pts[0, 1]))}" r="4" '
        f'fill="none" stroke="#000" stroke-width="1.5"/>'
    )
    ly = 16
    for phase, color in PHASE_COLORS.items():
        parts.append(f'<rect x="8" y="{ly - 9}" width="18" height="4" fill="{color}"/>')
        parts.append(f'<text x="30" y="{ly}" font-size="11" font-family="sans-serif">{phase}</text>')
        ly += 14
    parts.append("</svg>")
    return "\n".join(parts)


def write_scenario_svg(path, field: Field, result: ScenarioResult) -> None:
    atomic_write_text(path, scenario_svg(field, result))
