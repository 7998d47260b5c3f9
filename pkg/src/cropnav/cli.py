"""Command-line interface.

Subcommands:

* ``generate`` - build a field JSON from a field spec YAML
* ``run``      - simulate one scenario from a run config, write artifacts
* ``sweep``    - rerun a config across a parameter range (tilt or spacing
  calibration error), collecting coverage per point
* ``report``   - recompute the coverage report from saved artifacts
* ``bench``    - time the compiled image kernels against the Python lane

Exit codes: 0 success, 1 configuration/usage errors, 2 simulation timeout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .config import ConfigError, load_run_config, parse_field_section
from .field import field_to_json, generate_field, load_field
from .io import atomic_write_text
from .metrics import coverage_report, sweep_summary
from .simloop import ScenarioResult, run_scenario, servo_csv, trajectory_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TIMEOUT = 2


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_CONFIG


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        return _fail(f"cannot parse field spec: {exc}")
    if not isinstance(raw, dict):
        return _fail("field spec file must be a mapping")
    data = raw.get("field", raw)
    try:
        spec, path = parse_field_section(data, args.seed)
        if spec is None:
            return _fail("generate needs a field spec, not a field path")
        field = generate_field(spec)
    except ConfigError as exc:
        return _fail(str(exc))
    atomic_write_text(args.out, field_to_json(field, spec))
    n = sum(len(r.plants) for r in field.rows)
    print(f"wrote {args.out}: {len(field.rows)} rows, {n} plants")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run


def _execute(config, field):
    front, back = config.camera.rigs()
    side = None if config.initial_side == "auto" else config.initial_side
    result = run_scenario(
        field,
        front,
        back,
        config.controller,
        config.navigator,
        config.sim,
        initial_side=side,
    )
    return result


def _write_run_artifacts(outdir: Path, config, field, result: ScenarioResult) -> None:
    resolved = config.resolved()
    atomic_write_text(outdir / "field.json", field_to_json(field, config.field_spec))
    atomic_write_text(outdir / "trajectory.csv", trajectory_csv(result))
    atomic_write_text(outdir / "servo.csv", servo_csv(result))
    events = {
        "config": resolved,
        "timed_out": result.timed_out,
        "events": [{"kind": e.kind, "sim_time": e.sim_time} for e in result.events],
    }
    atomic_write_text(outdir / "events.json", json.dumps(events, indent=1))
    report = coverage_report(field, result)
    doc = {"config": resolved, "report": json.loads(report.to_json())}
    atomic_write_text(outdir / "report.json", json.dumps(doc, indent=1))


def _dump_images(outdir: Path, config, field, result: ScenarioResult, every: int) -> None:
    from .perception import exg_mask
    from .render import render_view, write_pbm, write_ppm

    front, back = config.camera.rigs()
    render_front = front.with_tilt_error(config.sim.tilt_error)
    render_back = back.with_tilt_error(config.sim.tilt_error)
    imgdir = outdir / "images"
    for i, sample in enumerate(result.samples):
        if i % every:
            continue
        for tag, rig in (("front", render_front), ("back", render_back)):
            img = render_view(rig, sample.pose, field)
            write_ppm(imgdir / f"{i:06d}_{tag}.ppm", img)
            write_pbm(imgdir / f"{i:06d}_{tag}_mask.pbm", exg_mask(img))


def cmd_run(args) -> int:
    try:
        config = load_run_config(args.config, args.seed)
        field = config.load_field()
    except (ConfigError, OSError, ValueError) as exc:
        return _fail(str(exc))
    result = _execute(config, field)
    outdir = Path(args.out)
    _write_run_artifacts(outdir, config, field, result)
    if args.dump_images:
        _dump_images(outdir, config, field, result, args.dump_images)
    if args.plot:
        from .plotting import write_scenario_svg

        write_scenario_svg(outdir / "run.svg", field, result)
    rep = coverage_report(field, result)
    print(
        f"{'TIMEOUT' if result.timed_out else 'done'}: "
        f"visited={rep.visited_rows_pct:.1f}% "
        f"dist={rep.avg_row_distance_cm:.2f}+/-{rep.std_row_distance_cm:.2f}cm "
        f"missed/row={rep.missed_crops_per_row:.2f} "
        f"maneuver={rep.maneuvering_space_m:.2f}m"
    )
    return EXIT_TIMEOUT if result.timed_out else EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _sweep_point(payload) -> tuple[float, dict]:
    """Worker: one sweep run; returns (param_value, report dict)."""
    config_path, seed, param, value = payload
    config = load_run_config(config_path, seed)
    if param == "tilt_error":
        config = replace(config, sim=replace(config.sim, tilt_error=math.radians(value)))
        field = config.load_field()
    elif param == "delta_error":
        if config.field_spec is None:
            raise ConfigError("delta_error sweeps need a generated field, not field.path")
        actual = config.navigator.delta + value
        spec = replace(config.field_spec, spacing_mean=actual)
        spec.validate()
        config = replace(
            config, field_spec=spec, sim=replace(config.sim, delta_error=value)
        )
        field = generate_field(spec)
    else:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    result = _execute(config, field)
    rep = coverage_report(field, result)
    return value, json.loads(rep.to_json())


def cmd_sweep(args) -> int:
    try:
        config = load_run_config(args.config, args.seed)  # validate up front
        if args.steps < 1:
            raise ConfigError("steps must be >= 1")
        if args.param == "delta_error" and config.field_spec is None:
            raise ConfigError("delta_error sweeps need a generated field, not field.path")
    except ConfigError as exc:
        return _fail(str(exc))
    values = (
        [args.min]
        if args.steps == 1
        else list(np.linspace(args.min, args.max, args.steps))
    )
    payloads = [(args.config, args.seed, args.param, float(v)) for v in values]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]

    from .metrics import CoverageReport

    runs = [
        (v, CoverageReport(**{k: tuple(val) if k == "missed_per_row" else val for k, val in rep.items()}))
        for v, rep in results
    ]
    curve = sweep_summary(runs)
    unit = "deg" if args.param == "tilt_error" else "m"
    outdir = Path(args.out)
    atomic_write_text(outdir / "sweep.csv", curve.to_csv(f"{args.param}_{unit}"))
    summary = {
        "config": config.resolved(),
        "param": args.param,
        "unit": unit,
        "points": [
            {"value": v, "report": rep} for v, rep in results
        ],
        "full_coverage_interval": curve.full_coverage_interval,
    }
    atomic_write_text(outdir / "summary.json", json.dumps(summary, indent=1))
    for v, rep in results:
        print(f"{args.param}={v:+.3f}{unit}: visited={rep['visited_rows_pct']:.1f}%")
    print(f"full-coverage interval: {curve.full_coverage_interval}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def _samples_from_csv(path) -> list:
    from .controller import ControlVec
    from .geometry import Pose2
    from .simloop import TrajectorySample

    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,x,y,theta,v,omega,phase":
            raise ConfigError(f"unexpected trajectory header {header!r}")
        for line in fh:
            t, x, y, th, v, om, phase = line.strip().split(",")
            samples.append(
                TrajectorySample(
                    float(t),
                    Pose2(float(x), float(y), float(th)),
                    ControlVec(float(v), float(om)),
                    phase,
                )
            )
    return samples


def cmd_report(args) -> int:
    from .navigator import NavState
    from .perception import SlidingWindow

    try:
        field = load_field(args.field)
        samples = _samples_from_csv(args.trajectory)
        timed_out = False
        if args.events:
            with open(args.events, "r", encoding="utf-8") as fh:
                timed_out = bool(json.load(fh).get("timed_out", False))
    except (OSError, ConfigError, ValueError) as exc:
        return _fail(str(exc))
    dummy = NavState("front", SlidingWindow(0.0, 1.0, 1), "done", "left", 0)
    result = ScenarioResult(samples, [], [], timed_out, dummy)
    rep = coverage_report(field, result)
    atomic_write_text(args.out, rep.to_json())
    print(rep.to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args) -> int:
    from .benchmark import run_benchmark

    run_benchmark(frames=args.frames)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cropnav", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a field JSON from a spec YAML")
    g.add_argument("--spec", required=True, help="field spec YAML")
    g.add_argument("--out", required=True, help="output field JSON path")
    g.add_argument("--seed", type=int, default=None, help="override the spec seed")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run one simulated scenario")
    r.add_argument("--config", required=True, help="run config YAML")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None, help="override sim and field seeds")
    r.add_argument(
        "--dump-images", type=int, default=0, metavar="N",
        help="write PPM frames and PBM masks every N control steps",
    )
    r.add_argument("--plot", action="store_true", help="write a top-down SVG")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="sweep a calibration-error parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=["tilt_error", "delta_error"],
                   help="tilt_error in degrees, delta_error in meters")
    s.add_argument("--min", type=float, required=True)
    s.add_argument("--max", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="recompute metrics from saved artifacts")
    rp.add_argument("--field", required=True, help="field JSON")
    rp.add_argument("--trajectory", required=True, help="trajectory CSV")
    rp.add_argument("--events", default=None, help="events JSON (for the timeout flag)")
    rp.add_argument("--out", required=True, help="output report JSON")
    rp.set_defaults(func=cmd_report)

    b = sub.add_parser("bench", help="compare compiled and Python kernel lanes")
    b.add_argument("--frames", type=int, default=120)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
