"""Field-coverage evaluation metrics.

From a trajectory and the ground-truth field: average/std distance to the
tracked crop row while following, average missed crops per row (a crop is
covered when some trajectory segment passes within 10 cm of it), the
percentage of visited rows (a row is visited when it misses fewer than 5
crops), and the maneuvering space (the maximum longitudinal excursion
beyond the row-end line while exiting or entering rows).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .field import Field, point_to_polyline_distance
from .navigator import NavEvent
from .simloop import ScenarioResult, TrajectorySample

__all__ = [
    "CROP_COVER_RANGE",
    "VISITED_ROW_MAX_MISSES",
    "CoverageReport",
    "SweepCurve",
    "coverage_report",
    "sweep_summary",
]

CROP_COVER_RANGE = 0.10  # meters: a crop this close to the trajectory is covered
VISITED_ROW_MAX_MISSES = 5  # a row is visited when it misses fewer crops than this


@dataclass(frozen=True)
class CoverageReport:
    avg_row_distance_cm: float
    std_row_distance_cm: float
    missed_crops_per_row: float
    visited_rows_pct: float
    maneuvering_space_m: float
    missed_per_row: tuple[int, ...]
    timed_out: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)


@dataclass(frozen=True)
class SweepCurve:
    params: tuple[float, ...]
    visited_rows_pct: tuple[float, ...]
    full_coverage_interval: tuple[float, float] | None

    def to_csv(self, param_name: str) -> str:
        lines = [f"{param_name},visited_rows_pct"]
        for p, c in zip(self.params, self.visited_rows_pct):
            lines.append(f"{p:.9g},{c:.6f}")
        return "\n".join(lines) + "\n"


def _min_distance_to_trajectory(traj_xy: np.ndarray, plants: np.ndarray) -> np.ndarray:
    """Min distance from each plant to the trajectory polyline (vectorized
    over segments, chunked over plants)."""
    a = traj_xy[:-1]
    d = traj_xy[1:] - a
    seg_sq = np.einsum("ij,ij->i", d, d)
    seg_sq = np.where(seg_sq == 0.0, 1.0, seg_sq)
    out = np.empty(len(plants))
    chunk = 256
    for lo in range(0, len(plants), chunk):
        q = plants[lo : lo + chunk]  # (m, 2)
        ap = q[:, None, :] - a[None, :, :]  # (m, n, 2)
        t = np.clip(np.einsum("mnj,nj->mn", ap, d) / seg_sq, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
        dist_sq = ((q[:, None, :] - closest) ** 2).sum(axis=2)
        out[lo : lo + chunk] = np.sqrt(dist_sq.min(axis=1))
    return out


def _phase_runs(samples: list[TrajectorySample]) -> list[tuple[str, int, int]]:
    """Contiguous runs of equal phase as (phase, start_idx, end_idx_excl)."""
    runs = []
    start = 0
    for i in range(1, len(samples) + 1):
        if i == len(samples) or samples[i].phase != samples[start].phase:
            runs.append((samples[start].phase, start, i))
            start = i
    return runs


def _alongside_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Distances from query points to a polyline, for points alongside it.

    Points whose nearest polyline point is one of the two polyline
    endpoints (i.e. the robot is beyond the row span, approaching or
    overshooting) get NaN so they can be excluded from tracking stats.
    """
    a = points[:-1]
    d = points[1:] - a
    seg_sq = np.einsum("ij,ij->i", d, d)
    seg_sq = np.where(seg_sq == 0.0, 1.0, seg_sq)
    out = np.empty(len(query))
    for i, q in enumerate(query):
        t = np.clip(((q - a) * d).sum(axis=1) / seg_sq, 0.0, 1.0)
        closest = a + t[:, None] * d
        dist = np.sqrt(((q - closest) ** 2).sum(axis=1))
        j = int(np.argmin(dist))
        interior = not ((j == 0 and t[0] == 0.0) or (j == len(a) - 1 and t[-1] == 1.0))
        out[i] = dist[j] if interior else np.nan
    return out


def _row_end_excursion(row, p: np.ndarray) -> float:
    """Longitudinal distance of p beyond either end line of a row.

    The end line is perpendicular to the row tangent at the outermost
    plant; points inside the row span give zero.
    """
    line = row.centerline
    if row.plants:
        first = np.array([row.plants[0].position.x, row.plants[0].position.y])
        last = np.array([row.plants[-1].position.x, row.plants[-1].position.y])
    else:
        first, last = line[0], line[-1]
    t_start = line[1] - line[0]
    t_start = t_start / np.hypot(*t_start)
    t_end = line[-1] - line[-2]
    t_end = t_end / np.hypot(*t_end)
    beyond_end = float(np.dot(p - last, t_end))
    beyond_start = float(np.dot(p - first, -t_start))
    return max(beyond_end, beyond_start, 0.0)


def coverage_report(
    field: Field, result: ScenarioResult, events: list[NavEvent] | None = None
) -> CoverageReport:
    """Score one run against the ground-truth field."""
    samples = result.samples
    if not samples:
        raise ValueError("empty trajectory")
    traj_xy = np.array([[s.pose.x, s.pose.y] for s in samples])

    # --- row-distance statistics over following stretches ----------------
    # Each following stretch is scored against one fixed row: the row
    # nearest the stretch's last sample, where the robot is converged (at
    # the first sample it may still be mid-transition between two rows).
    # Samples beyond the row span (approach and overshoot) are excluded.
    distances: list[float] = []
    followed_row_per_run: list[tuple[int, int, int]] = []  # (row, start, end)
    for phase, lo, hi in _phase_runs(samples):
        if phase != "following":
            continue
        anchor = traj_xy[hi - 1]
        row_idx = int(
            np.argmin([point_to_polyline_distance(r.centerline, anchor) for r in field.rows])
        )
        followed_row_per_run.append((row_idx, lo, hi))
        d = _alongside_distances(field.rows[row_idx].centerline, traj_xy[lo:hi])
        distances.extend(d[~np.isnan(d)].tolist())
    dist_arr = np.array(distances) if distances else np.zeros(1)

    # --- missed crops per row ---------------------------------------------
    missed: list[int] = []
    for row in field.rows:
        plants = row.plant_array()[:, :2]
        dmin = _min_distance_to_trajectory(traj_xy, plants)
        missed.append(int(np.count_nonzero(dmin > CROP_COVER_RANGE)))
    missed_arr = np.array(missed)
    visited = missed_arr < VISITED_ROW_MAX_MISSES
    visited_pct = 100.0 * float(visited.sum()) / len(field.rows)

    # internal consistency: the percentage must agree with the vector
    assert visited_pct == 100.0 * sum(m < VISITED_ROW_MAX_MISSES for m in missed) / len(missed)

    # --- maneuvering space -------------------------------------------------
    # excursion beyond the end line of the row followed before the turn
    maneuver = 0.0
    last_followed = followed_row_per_run[0][0] if followed_row_per_run else 0
    run_iter = iter(followed_row_per_run)
    current_follow = next(run_iter, None)
    for phase, lo, hi in _phase_runs(samples):
        if phase == "following":
            if current_follow is not None and current_follow[1] == lo:
                last_followed = current_follow[0]
                current_follow = next(run_iter, None)
            continue
        if phase in ("exiting", "entering"):
            row = field.rows[last_followed]
            for p in traj_xy[lo:hi]:
                maneuver = max(maneuver, _row_end_excursion(row, p))

    return CoverageReport(
        avg_row_distance_cm=float(dist_arr.mean() * 100.0),
        std_row_distance_cm=float(dist_arr.std() * 100.0),
        missed_crops_per_row=float(missed_arr.mean()),
        visited_rows_pct=visited_pct,
        maneuvering_space_m=maneuver,
        missed_per_row=tuple(int(m) for m in missed_arr),
        timed_out=result.timed_out,
    )


def sweep_summary(runs: list[tuple[float, CoverageReport]]) -> SweepCurve:
    """Order sweep runs by parameter and find the widest contiguous stretch
    of full coverage."""
    if not runs:
        raise ValueError("sweep_summary needs at least one run")
    ordered = sorted(runs, key=lambda pr: pr[0])
    params = tuple(p for p, _ in ordered)
    pct = tuple(r.visited_rows_pct for _, r in ordered)

    best: tuple[float, float] | None = None
    i = 0
    n = len(ordered)
    while i < n:
        if pct[i] == 100.0:
            j = i
            while j + 1 < n and pct[j + 1] == 100.0:
                j += 1
            cand = (params[i], params[j])
            if best is None or (cand[1] - cand[0]) > (best[1] - best[0]):
                best = cand
            i = j + 1
        else:
            i += 1
    return SweepCurve(params, pct, best)
