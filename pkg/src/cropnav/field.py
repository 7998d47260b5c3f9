"""Procedural generation of ground-truth crop fields.

A field is an ordered set of crop rows.  Rows are parallel offsets of a
common base curve (straight line, one sine period, or a parabola), so
curved rows stay locally parallel.  Plants are laid out along each row's
centerline with independently drawn gaps, lateral jitter and canopy radii.

Randomness comes from ``numpy`` Philox streams derived from the spec seed
through ``SeedSequence`` spawn keys, one substream per row, which makes
generation reproducible bit for bit across platforms and independent of
row evaluation order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from .geometry import GroundPoint

__all__ = [
    "FieldSpecError",
    "Plant",
    "CropRow",
    "Field",
    "FieldSpec",
    "generate_field",
    "nearest_row_distance",
    "point_to_polyline_distance",
    "field_to_json",
    "field_from_json",
    "save_field",
    "load_field",
]

S_CURVE_AMPLITUDE = 1.5  # meters, one full sine period over the row length
PARABOLA_SAGITTA = 2.0  # meters of bow at mid-row
CENTERLINE_STEP = 0.05  # meters between sampled centerline points
MAX_LATERAL_JITTER = 0.03  # plants stay within 3 cm of the centerline

_SHAPES = ("straight", "s_curve", "parabola")


class FieldSpecError(ValueError):
    """Raised for invalid field specifications."""


@dataclass(frozen=True)
class Plant:
    position: GroundPoint
    canopy_radius: float


@dataclass(frozen=True)
class CropRow:
    """One crop row: ordered plants plus the sampled centerline polyline."""

    plants: tuple[Plant, ...]
    centerline: np.ndarray  # (n, 2), ordered along the row

    def plant_array(self) -> np.ndarray:
        """(n, 3) array of x, y, canopy_radius."""
        return np.array([[p.position.x, p.position.y, p.canopy_radius] for p in self.plants])


@dataclass(frozen=True)
class Field:
    rows: tuple[CropRow, ...]
    nominal_spacing: float

    @cached_property
    def _plant_cache(self) -> np.ndarray:
        rows = [r.plant_array() for r in self.rows if r.plants]
        return np.vstack(rows) if rows else np.zeros((0, 3))

    def all_plants(self) -> np.ndarray:
        """(n, 3) stacked plant array over all rows (cached)."""
        return self._plant_cache


@dataclass(frozen=True)
class FieldSpec:
    shape: str = "straight"
    row_count: int = 8
    row_length: float = 20.0
    spacing_mean: float = 0.50
    spacing_std: float = 0.05
    plant_gap_min: float = 0.05
    plant_gap_max: float = 0.15
    canopy_radius_min: float = 0.03
    canopy_radius_max: float = 0.06
    lateral_jitter_std: float = 0.01
    seed: int = 0

    def validate(self) -> None:
        if self.shape not in _SHAPES:
            raise FieldSpecError(f"unknown shape {self.shape!r}; expected one of {_SHAPES}")
        if self.row_count < 1:
            raise FieldSpecError("row_count must be >= 1")
        if self.row_length <= 0:
            raise FieldSpecError("row_length must be positive")
        if not 0 < self.plant_gap_min <= self.plant_gap_max:
            raise FieldSpecError("need 0 < plant_gap_min <= plant_gap_max")
        if not 0 < self.canopy_radius_min <= self.canopy_radius_max:
            raise FieldSpecError("need 0 < canopy_radius_min <= canopy_radius_max")
        if self.spacing_mean <= 2 * self.canopy_radius_max:
            raise FieldSpecError("spacing_mean must exceed twice the largest canopy radius")
        if self.spacing_std < 0 or self.lateral_jitter_std < 0:
            raise FieldSpecError("standard deviations must be non-negative")


def _base_curve(spec: FieldSpec, x: np.ndarray) -> np.ndarray:
    if spec.shape == "straight":
        return np.zeros_like(x)
    if spec.shape == "s_curve":
        return S_CURVE_AMPLITUDE * np.sin(2.0 * np.pi * x / spec.row_length)
    # parabola: zero at both ends, sagitta at mid-row
    t = x / spec.row_length
    return 4.0 * PARABOLA_SAGITTA * t * (1.0 - t)


def _base_slope(spec: FieldSpec, x: np.ndarray) -> np.ndarray:
    if spec.shape == "straight":
        return np.zeros_like(x)
    if spec.shape == "s_curve":
        k = 2.0 * np.pi / spec.row_length
        return S_CURVE_AMPLITUDE * k * np.cos(k * x)
    return 4.0 * PARABOLA_SAGITTA * (1.0 - 2.0 * x / spec.row_length) / spec.row_length


def _row_centerline(spec: FieldSpec, offset: float) -> np.ndarray:
    """Sampled centerline of the row offset laterally from the base curve."""
    n = max(int(np.ceil(spec.row_length / CENTERLINE_STEP)), 1) + 1
    x = np.linspace(0.0, spec.row_length, n)
    y = _base_curve(spec, x)
    slope = _base_slope(spec, x)
    norm = np.sqrt(1.0 + slope**2)
    # unit normal (left of the direction of travel)
    nx, ny = -slope / norm, 1.0 / norm
    return np.column_stack([x + offset * nx, y + offset * ny])


def _arc_positions(centerline: np.ndarray) -> np.ndarray:
    seg = np.diff(centerline, axis=0)
    return np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])


def _point_at_arc(centerline: np.ndarray, arc: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Point and unit tangent at arc-length ``s`` along the polyline."""
    i = int(np.searchsorted(arc, s, side="right")) - 1
    i = min(max(i, 0), len(centerline) - 2)
    seg = centerline[i + 1] - centerline[i]
    seg_len = np.hypot(seg[0], seg[1])
    t = (s - arc[i]) / seg_len
    return centerline[i] + t * seg, seg / seg_len


def generate_field(spec: FieldSpec) -> Field:
    """Generate a field deterministically from its spec.

    Row lateral offsets accumulate spacing draws N(spacing_mean,
    spacing_std); plant gaps are uniform in [gap_min, gap_max] along the
    row arc; lateral jitter is a clipped normal perpendicular to the row.
    """
    spec.validate()
    root = np.random.SeedSequence(spec.seed)

    spacing_rng = np.random.Generator(np.random.Philox(root.spawn(1)[0]))
    spacings = spacing_rng.normal(spec.spacing_mean, spec.spacing_std, size=spec.row_count - 1)
    spacings = np.maximum(spacings, 2.0 * spec.canopy_radius_max + 0.01)
    offsets = np.concatenate([[0.0], np.cumsum(spacings)])

    row_seeds = root.spawn(spec.row_count + 1)[1:]
    rows = []
    for k in range(spec.row_count):
        centerline = _row_centerline(spec, float(offsets[k]))
        arc = _arc_positions(centerline)
        total = float(arc[-1])
        rng = np.random.Generator(np.random.Philox(row_seeds[k]))
        plants = []
        s = 0.0
        while s <= total:
            pos, tangent = _point_at_arc(centerline, arc, s)
            jitter = float(np.clip(rng.normal(0.0, spec.lateral_jitter_std),
                                   -MAX_LATERAL_JITTER, MAX_LATERAL_JITTER))
            normal = np.array([-tangent[1], tangent[0]])
            p = pos + jitter * normal
            radius = float(rng.uniform(spec.canopy_radius_min, spec.canopy_radius_max))
            plants.append(Plant(GroundPoint(float(p[0]), float(p[1])), radius))
            s += float(rng.uniform(spec.plant_gap_min, spec.plant_gap_max))
        rows.append(CropRow(tuple(plants), centerline))
    return Field(tuple(rows), spec.spacing_mean)


# ---------------------------------------------------------------------------
# distance queries


def point_to_polyline_distance(poly: np.ndarray, p) -> float:
    """Exact distance from a point to a polyline (vectorized over segments)."""
    q = np.asarray(p, dtype=float)
    a = poly[:-1]
    d = poly[1:] - a
    seg_sq = np.einsum("ij,ij->i", d, d)
    seg_sq[seg_sq == 0.0] = 1.0
    t = np.clip(np.einsum("ij,ij->i", q - a, d) / seg_sq, 0.0, 1.0)
    closest = a + t[:, None] * d
    return float(np.min(np.hypot(*(q - closest).T)))


def nearest_row_distance(field: Field, p) -> tuple[int, float]:
    """Index of the closest row centerline and the distance to it."""
    if not field.rows:
        raise ValueError("field has no rows")
    best_i, best_d = 0, np.inf
    for i, row in enumerate(field.rows):
        d = point_to_polyline_distance(row.centerline, p)
        if d < best_d:
            best_i, best_d = i, d
    return best_i, best_d


# ---------------------------------------------------------------------------
# serialization: {"nominal_spacing": .., "rows": [{"centerline": [[x, y], ..],
#                 "plants": [[x, y, radius], ..]}, ..], "spec": {..}}


def field_to_json(field: Field, spec: FieldSpec | None = None) -> str:
    doc = {
        "nominal_spacing": field.nominal_spacing,
        "rows": [
            {
                "centerline": [[float(x), float(y)] for x, y in row.centerline],
                "plants": [
                    [p.position.x, p.position.y, p.canopy_radius] for p in row.plants
                ],
            }
            for row in field.rows
        ],
    }
    if spec is not None:
        doc["spec"] = asdict(spec)
    return json.dumps(doc, indent=1)


def field_from_json(text: str) -> Field:
    doc = json.loads(text)
    rows = []
    for r in doc["rows"]:
        plants = tuple(
            Plant(GroundPoint(float(x), float(y)), float(rad)) for x, y, rad in r["plants"]
        )
        rows.append(CropRow(plants, np.asarray(r["centerline"], dtype=float)))
    return Field(tuple(rows), float(doc["nominal_spacing"]))


def save_field(path, field: Field, spec: FieldSpec | None = None) -> None:
    from .io import atomic_write_text

    atomic_write_text(path, field_to_json(field, spec))


def load_field(path) -> Field:
    with open(path, "r", encoding="utf-8") as fh:
        return field_from_json(fh.read())
