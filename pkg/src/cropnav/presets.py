"""Canonical field layouts used in the evaluation.

Field 1 is the long straight reference field (8 rows of 20 m, 50 +/- 5 cm
spacing, 5-15 cm plant gaps).  Field 2 is short and wide, forcing many
turns in quick succession.  Fields 3 and 4 bend the rows into an S and a
parabola.  A smaller straight layout is provided for parameter sweeps.
"""

from __future__ import annotations

from dataclasses import replace

from .field import FieldSpec

__all__ = ["FIELD_PRESETS", "field_spec", "sweep_field_spec"]

FIELD_PRESETS: dict[str, FieldSpec] = {
    "field1": FieldSpec(shape="straight", row_count=8, row_length=20.0, seed=101),
    "field2": FieldSpec(shape="straight", row_count=12, row_length=6.0, seed=102),
    "field3": FieldSpec(shape="s_curve", row_count=8, row_length=24.0, seed=103),
    "field4": FieldSpec(shape="parabola", row_count=8, row_length=20.0, seed=104),
}


def field_spec(name: str, seed: int | None = None) -> FieldSpec:
    """A preset field spec, optionally reseeded."""
    spec = FIELD_PRESETS[name]
    return spec if seed is None else replace(spec, seed=seed)


def sweep_field_spec(seed: int = 0, spacing_mean: float = 0.5) -> FieldSpec:
    """Compact straight field for robustness sweeps: enough rows to need
    several transitions, short enough to run quickly."""
    return FieldSpec(
        shape="straight",
        row_count=5,
        row_length=8.0,
        spacing_mean=spacing_mean,
        seed=seed,
    )
