"""Run configuration: a nested YAML file with strict key checking.

Every section and key is optional and falls back to the package defaults,
but unknown keys anywhere are hard errors (a typo in a sweep config would
silently invalidate results otherwise).  The fully resolved configuration
is embedded in every JSON artifact a run produces, so any output can be
reproduced from itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, fields, replace
from pathlib import Path

import yaml

from .controller import ControllerParams
from .field import Field, FieldSpec, generate_field, load_field
from .geometry import CameraIntrinsics, CameraRig
from .navigator import NavParams
from .presets import FIELD_PRESETS
from .simloop import SimConfig

__all__ = ["ConfigError", "CameraConfig", "RunConfig", "load_run_config", "parse_field_section"]


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class CameraConfig:
    fx: float = 277.0
    fy: float = 277.0
    cx: float | None = None  # None: image center
    cy: float | None = None
    width: int = 320
    height: int = 240
    rho_deg: float = 75.0
    tz: float = 0.45
    offset: float = 0.30

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(
            fx=self.fx,
            fy=self.fy,
            cx=self.width / 2.0 if self.cx is None else self.cx,
            cy=self.height / 2.0 if self.cy is None else self.cy,
            width=self.width,
            height=self.height,
        )

    def rigs(self) -> tuple[CameraRig, CameraRig]:
        intr = self.intrinsics()
        rho = math.radians(self.rho_deg)
        front = CameraRig("front", rho, self.tz, self.offset, intr)
        back = CameraRig("back", rho, self.tz, -self.offset, intr)
        return front, back


@dataclass(frozen=True)
class RunConfig:
    field_spec: FieldSpec | None
    field_path: str | None
    camera: CameraConfig
    controller: ControllerParams
    navigator: NavParams
    initial_side: str  # "auto" | "left" | "right"
    sim: SimConfig

    def load_field(self) -> Field:
        if self.field_path is not None:
            return load_field(self.field_path)
        return generate_field(self.field_spec)

    def resolved(self) -> dict:
        """Fully materialized configuration for embedding in outputs."""
        def dc(obj):
            return {f.name: getattr(obj, f.name) for f in fields(obj)}

        return {
            "field": dc(self.field_spec) if self.field_spec else {"path": self.field_path},
            "camera": dc(self.camera),
            "controller": dc(self.controller),
            "navigator": {**dc(self.navigator), "initial_side": self.initial_side},
            "sim": dc(self.sim),
        }


_SECTION_KEYS = ("field", "camera", "controller", "navigator", "sim")

_CONTROLLER_KEYS = {f.name for f in fields(ControllerParams)} | {"lambda"}
_NAV_KEYS = {f.name for f in fields(NavParams)}
_SIM_KEYS = {f.name for f in fields(SimConfig)} | {"tilt_error_deg"} - {"tilt_error"}
_CAMERA_KEYS = {f.name for f in fields(CameraConfig)}
_FIELD_KEYS = {f.name for f in fields(FieldSpec)} | {"preset", "path"}


def _check_keys(section: str, data: dict, allowed: set[str]) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown key {section}.{key}")


def _build(cls, data: dict, section: str):
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} section: {exc}") from exc


def parse_field_section(data: dict, seed: int | None = None) -> tuple[FieldSpec | None, str | None]:
    """Field source: a preset name, a saved field JSON, or an inline spec."""
    if not isinstance(data, dict):
        raise ConfigError("field section must be a mapping")
    _check_keys("field", data, _FIELD_KEYS)
    if "preset" in data:
        extra = set(data) - {"preset", "seed"}
        if extra:
            raise ConfigError(f"field.preset does not combine with {sorted(extra)}")
        name = data["preset"]
        if name not in FIELD_PRESETS:
            raise ConfigError(
                f"unknown field preset {name!r}; available: {sorted(FIELD_PRESETS)}"
            )
        spec = FIELD_PRESETS[name]
        if "seed" in data:
            spec = replace(spec, seed=int(data["seed"]))
    elif "path" in data:
        if len(data) > 1:
            raise ConfigError("field.path does not combine with other field keys")
        return None, str(data["path"])
    else:
        spec = _build(FieldSpec, data, "field")
    if seed is not None:
        spec = replace(spec, seed=seed)
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(f"invalid field spec: {exc}") from exc
    return spec, None


def load_run_config(path, seed: int | None = None) -> RunConfig:
    """Parse and validate a YAML run configuration.

    ``seed`` overrides both the simulation seed and (when the field is
    generated rather than loaded) the field seed.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level of the config must be a mapping")
    for key in raw:
        if key not in _SECTION_KEYS:
            raise ConfigError(f"unknown section {key!r}; expected one of {_SECTION_KEYS}")

    field_spec, field_path = parse_field_section(raw.get("field", {}), seed)

    camera_data = raw.get("camera", {}) or {}
    _check_keys("camera", camera_data, _CAMERA_KEYS)
    camera = _build(CameraConfig, camera_data, "camera")

    ctrl_data = dict(raw.get("controller", {}) or {})
    _check_keys("controller", ctrl_data, _CONTROLLER_KEYS)
    if "lambda" in ctrl_data:
        ctrl_data["lam"] = ctrl_data.pop("lambda")
    controller = _build(ControllerParams, ctrl_data, "controller")

    nav_data = dict(raw.get("navigator", {}) or {})
    _check_keys("navigator", nav_data, _NAV_KEYS)
    initial_side = nav_data.pop("initial_side", "auto")
    if initial_side not in ("auto", "left", "right"):
        raise ConfigError("navigator.initial_side must be auto, left or right")
    navigator = _build(NavParams, nav_data, "navigator")

    sim_data = dict(raw.get("sim", {}) or {})
    _check_keys("sim", sim_data, _SIM_KEYS)
    if "tilt_error_deg" in sim_data:
        sim_data["tilt_error"] = math.radians(sim_data.pop("tilt_error_deg"))
    if seed is not None:
        sim_data["seed"] = seed
    sim = _build(SimConfig, sim_data, "sim")

    # camera intrinsics validation happens here rather than at first use
    try:
        camera.rigs()
    except ValueError as exc:
        raise ConfigError(f"invalid camera section: {exc}") from exc

    return RunConfig(
        field_spec=field_spec,
        field_path=field_path,
        camera=camera,
        controller=controller,
        navigator=navigator,
        initial_side=initial_side,
        sim=sim,
    )
