"""Batch command line front end.

``granufv run config.txt`` reads a key = value configuration, simulates the
requested scenario and writes VTK frames, optional profile CSVs, a per-step
log, the mass history and a final summary into the output directory.
Exit codes: 0 success, 1 configuration error, 2 solver abort.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field as dfield, replace
from pathlib import Path

import numpy as np

from .adaptivity import (AdaptConfig, AdaptiveMesh, coarsen, error_indicator,
                         mark, refine)
from .io import frame_from_field, l1_error, profile_csv, sample_profile, write_vtk
from .mesh import generate_box_mesh
from .reconstruction import limited_field_gradients
from .scenarios import (OUTFLOW, WALL, BoundarySpec, ScenarioSpec,
                        chute_scenario, dam_break_scenario, flat_rest_scenario,
                        obstacle_scenario)
from .stepping import SolverError, StepConfig, initial_field, step

__all__ = ["ConfigError", "RunConfig", "RunSummary", "parse_config", "run", "main"]

_FMT = "{:.9g}"


class ConfigError(Exception):
    """Unusable run configuration."""


_SCENARIO_DEFAULTS = {
    "dam_break": dict(nx=256, ny=32, t_end=0.5, write_interval=0.1),
    "chute": dict(nx=120, ny=56, t_end=24.0, write_interval=3.0),
    "obstacle": dict(nx=120, ny=56, t_end=24.0, write_interval=3.0),
    "flat_rest": dict(nx=8, ny=8, t_end=1.0, write_interval=0.5),
}

_SCENARIO_FACTORIES = {
    "dam_break": dam_break_scenario,
    "chute": chute_scenario,
    "obstacle": obstacle_scenario,
    "flat_rest": flat_rest_scenario,
}


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    nx: int
    ny: int
    t_end: float
    write_interval: float
    cr: float = 0.5
    dt_floor: float = 1e-12
    max_steps: int = 10_000_000
    formats: tuple[str, ...] = ("vtk",)
    profile: tuple[str, float, int] | None = None
    adapt: bool = False
    adapt_config: AdaptConfig = dfield(default_factory=AdaptConfig)
    out_dir: Path = Path("out")


@dataclass
class RunSummary:
    config: RunConfig
    mesh: object
    field: object
    frame_times: list
    steps: int
    wall_time: float
    clamp_total: int
    clamp_interior_total: int
    mass_history: list
    adapt_reports: list
    l1_errors: list


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be on/off, got {value!r}")


def _parse_rule(value: str, key: str) -> str:
    if value not in (OUTFLOW, WALL):
        raise ConfigError(f"{key} must be outflow or wall, got {value!r}")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse a key = value run configuration document."""
    opts: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in opts:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        opts[key] = value
    return build_config(opts)


def _pop_float(opts, key, default=None):
    if key not in opts:
        return default
    try:
        return float(opts.pop(key))
    except ValueError:
        raise ConfigError(f"{key} must be a number") from None


def _pop_int(opts, key, default=None):
    if key not in opts:
        return default
    try:
        return int(opts.pop(key))
    except ValueError:
        raise ConfigError(f"{key} must be an integer") from None


def build_config(opts: dict[str, str]) -> RunConfig:
    opts = dict(opts)
    name = opts.pop("scenario", None)
    if name is None:
        raise ConfigError("missing required key 'scenario'")
    if name not in _SCENARIO_FACTORIES:
        raise ConfigError(f"unknown scenario {name!r}; choose from "
                          f"{sorted(_SCENARIO_FACTORIES)}")

    factory_kwargs = {}
    if name == "dam_break":
        for src, dst in (("h0", "h0"), ("zeta_deg", "zeta_deg"),
                         ("delta_deg", "delta_deg"), ("gravity", "gravity")):
            val = _pop_float(opts, src)
            if val is not None:
                factory_kwargs[dst] = val
    elif name in ("chute", "obstacle"):
        for src in ("zeta0_deg", "phi_deg", "delta_deg", "cap_r0"):
            val = _pop_float(opts, src)
            if val is not None:
                factory_kwargs[src] = val
        cx = _pop_float(opts, "cap_x")
        cy = _pop_float(opts, "cap_y")
        if cx is not None or cy is not None:
            factory_kwargs["cap_center"] = (cx if cx is not None else 4.0,
                                            cy if cy is not None else 0.0)
        if name == "obstacle":
            ox = _pop_float(opts, "cone_x")
            oy = _pop_float(opts, "cone_y")
            if ox is not None or oy is not None:
                factory_kwargs["cone_center"] = (ox if ox is not None else 13.0,
                                                 oy if oy is not None else 0.0)
            for src, dst in (("cone_r", "cone_radius"), ("cone_h", "cone_height")):
                val = _pop_float(opts, src)
                if val is not None:
                    factory_kwargs[dst] = val
    elif name == "flat_rest":
        val = _pop_float(opts, "h0")
        if val is not None:
            factory_kwargs["h0"] = val

    try:
        scenario = _SCENARIO_FACTORIES[name](**factory_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    x_min = _pop_float(opts, "x_min", scenario.x_range[0])
    x_max = _pop_float(opts, "x_max", scenario.x_range[1])
    y_min = _pop_float(opts, "y_min", scenario.y_range[0])
    y_max = _pop_float(opts, "y_max", scenario.y_range[1])
    scenario = replace(scenario, x_range=(x_min, x_max), y_range=(y_min, y_max))

    param_kwargs = {}
    for key in ("epsilon", "stretch", "gravity", "h_dry", "u_reg"):
        val = _pop_float(opts, key)
        if val is not None:
            param_kwargs[key] = val
    if param_kwargs:
        try:
            scenario = scenario.with_params(**param_kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    if "pressure" in opts:
        mode = opts.pop("pressure")
        if mode not in ("mohr_coulomb", "constant"):
            raise ConfigError(f"pressure must be mohr_coulomb or constant, "
                              f"got {mode!r}")
        scenario = replace(scenario, pressure_mode=mode)
    k_const = _pop_float(opts, "k_const")
    if k_const is not None:
        if k_const <= 0:
            raise ConfigError("k_const must be positive")
        scenario = replace(scenario, k_const=k_const)

    if "boundary" in opts:
        rule = _parse_rule(opts.pop("boundary"), "boundary")
        scenario = replace(scenario, boundary=BoundarySpec(rule, rule, rule, rule))
    bx = opts.pop("boundary_x", None)
    by = opts.pop("boundary_y", None)
    if bx is not None or by is not None:
        spec = scenario.boundary
        if bx is not None:
            rule = _parse_rule(bx, "boundary_x")
            spec = replace(spec, x_min=rule, x_max=rule)
        if by is not None:
            rule = _parse_rule(by, "boundary_y")
            spec = replace(spec, y_min=rule, y_max=rule)
        scenario = replace(scenario, boundary=spec)

    defaults = _SCENARIO_DEFAULTS[name]
    nx = _pop_int(opts, "nx", defaults["nx"])
    ny = _pop_int(opts, "ny", defaults["ny"])
    t_end = _pop_float(opts, "t_end", defaults["t_end"])
    write_interval = _pop_float(opts, "write_interval", defaults["write_interval"])
    if nx < 1 or ny < 1:
        raise ConfigError("nx and ny must be >= 1")
    if t_end <= 0 or write_interval <= 0:
        raise ConfigError("t_end and write_interval must be positive")

    cr = _pop_float(opts, "cr", 0.5)
    if not 0 < cr <= 1:
        raise ConfigError("cr must be in (0, 1]")
    dt_floor = _pop_float(opts, "dt_floor", 1e-12)
    max_steps = _pop_int(opts, "max_steps", 10_000_000)

    adapt = _parse_bool(opts.pop("adapt", "off"), "adapt")
    adapt_kwargs = {}
    for key in ("refine_fraction", "coarsen_fraction"):
        val = _pop_float(opts, key)
        if val is not None:
            adapt_kwargs[key] = val
    for key in ("max_level", "min_level", "adapt_interval"):
        val = _pop_int(opts, key)
        if val is not None:
            adapt_kwargs[key] = val
    try:
        adapt_config = AdaptConfig(**adapt_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    formats = tuple(f.strip() for f in opts.pop("formats", "vtk").split(",")
                    if f.strip())
    for fmt in formats:
        if fmt not in ("vtk", "csv"):
            raise ConfigError(f"unknown output format {fmt!r}")

    profile = None
    if "profile" in opts:
        parts = opts.pop("profile").split()
        if len(parts) != 3 or parts[0] not in ("x", "y"):
            raise ConfigError("profile must be '<axis> <offset> <n_samples>'")
        try:
            profile = (parts[0], float(parts[1]), int(parts[2]))
        except ValueError:
            raise ConfigError("profile must be '<axis> <offset> <n_samples>'") from None
        if profile[2] < 2:
            raise ConfigError("profile needs at least 2 samples")

    out_dir = Path(opts.pop("out", "out"))

    if opts:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(opts))}")

    return RunConfig(scenario=scenario, nx=nx, ny=ny, t_end=t_end,
                     write_interval=write_interval, cr=cr, dt_floor=dt_floor,
                     max_steps=max_steps, formats=formats, profile=profile,
                     adapt=adapt, adapt_config=adapt_config, out_dir=out_dir)


def _write_frame(config: RunConfig, mesh, field, index: int, label_time: float):
    scenario = config.scenario
    gradients = limited_field_gradients(mesh, field.U)
    indicator = error_indicator(mesh, field.U, gradients)
    frame = frame_from_field(mesh, field, scenario.params.h_dry, indicator)
    frame.time = label_time
    if "vtk" in config.formats:
        write_vtk(frame, config.out_dir / f"frame_{index:04d}.vtk")
    if config.profile is not None and "csv" in config.formats:
        axis, offset, n = config.profile
        rows = sample_profile(frame, axis, offset, n, gradients=gradients)
        path = config.out_dir / f"profile_{index:04d}.csv"
        path.write_text(profile_csv(rows))


def _adapt_event(amesh, field, config):
    """One adaptation pass: coarsen on the current marks, then re-mark and
    refine on the updated mesh."""
    reports = []
    acfg = config.adapt_config
    mesh = amesh.tri
    gradients = limited_field_gradients(mesh, field.U)
    indicator = error_indicator(mesh, field.U, gradients)
    _, coarsen_ids = mark(indicator, acfg, amesh.levels)
    if len(coarsen_ids):
        mesh, field, report = coarsen(amesh, field, coarsen_ids)
        reports.append(report)

    gradients = limited_field_gradients(mesh, field.U)
    indicator = error_indicator(mesh, field.U, gradients)
    refine_ids, _ = mark(indicator, acfg, amesh.levels)
    if len(refine_ids):
        mesh, field, report = refine(amesh, field, refine_ids,
                                     max_level=acfg.max_level)
        reports.append(report)
    return mesh, field, reports


def run(config: RunConfig) -> RunSummary:
    """Execute one simulation and write all artifacts. May raise SolverError."""
    t_start = time.perf_counter()
    scenario = config.scenario
    config.out_dir.mkdir(parents=True, exist_ok=True)

    mesh = generate_box_mesh(scenario.x_range, scenario.y_range,
                             config.nx, config.ny)
    amesh = AdaptiveMesh(mesh) if config.adapt else None
    field = initial_field(mesh, scenario)
    step_cfg = StepConfig(cr=config.cr, t_end=config.t_end,
                          dt_floor=config.dt_floor, max_steps=config.max_steps)

    n_frames = int(round(config.t_end / config.write_interval))
    targets = [min(k * config.write_interval, config.t_end)
               for k in range(1, n_frames + 1)]
    if not targets or targets[-1] < config.t_end:
        targets.append(config.t_end)

    mass_history = []
    adapt_reports = []
    l1_errors = []
    clamp_total = 0
    clamp_interior_total = 0

    log_lines = []
    _write_frame(config, mesh, field, 0, 0.0)
    if scenario.exact is not None:
        h_exact, _ = scenario.exact(mesh.cell_centroid[:, 0], 0.0)
        l1_errors.append((0.0, l1_error(mesh, field.U[:, 0], h_exact)))
    mass_history.append((0.0, field.total_mass(mesh)))

    last_adapt = -1
    for index, target in enumerate(targets, start=1):
        cfg = replace(step_cfg, t_end=target)
        while field.t < target - 1e-12 * max(1.0, target):
            if (config.adapt
                    and field.step_count % config.adapt_config.adapt_interval == 0
                    and field.step_count > 0
                    and field.step_count != last_adapt):
                last_adapt = field.step_count
                mesh, field, reports = _adapt_event(amesh, field, config)
                for rep in reports:
                    adapt_reports.append(rep)
                    log_lines.append(
                        f"adapt step={field.step_count} cells "
                        f"{rep.cells_before}->{rep.cells_after} "
                        f"refined={rep.refined} coarsened={rep.coarsened} "
                        f"mass {_FMT.format(rep.mass_before)}->"
                        f"{_FMT.format(rep.mass_after)}")
            field, record = step(mesh, field, scenario, cfg)
            clamp_total += record.clamp_count
            clamp_interior_total += record.clamp_interior_count
            mass_history.append((record.t, record.total_mass))
            log_lines.append(record.logline())
        _write_frame(config, mesh, field, index, target)
        if scenario.exact is not None:
            h_exact, _ = scenario.exact(mesh.cell_centroid[:, 0], target)
            l1_errors.append((target, l1_error(mesh, field.U[:, 0], h_exact)))

    wall = time.perf_counter() - t_start
    (config.out_dir / "run.log").write_text("\n".join(log_lines) + "\n")
    mass_csv = ["t,mass"]
    mass_csv += [f"{_FMT.format(t)},{_FMT.format(m)}" for t, m in mass_history]
    (config.out_dir / "mass_history.csv").write_text("\n".join(mass_csv) + "\n")
    if l1_errors:
        err_csv = ["t,l1_error"]
        err_csv += [f"{_FMT.format(t)},{_FMT.format(e)}" for t, e in l1_errors]
        (config.out_dir / "l1_errors.csv").write_text("\n".join(err_csv) + "\n")

    summary = [
        f"scenario = {scenario.name}",
        f"cells    = {mesh.n_cells}",
        f"steps    = {field.step_count}",
        f"t_end    = {_FMT.format(field.t)}",
        f"mass     = {_FMT.format(field.total_mass(mesh))}",
        f"clamps   = {clamp_total} (interior {clamp_interior_total})",
        f"adapt_events = {len(adapt_reports)}",
        f"wall_time_s  = {wall:.3f}",
    ]
    (config.out_dir / "summary.txt").write_text("\n".join(summary) + "\n")

    return RunSummary(config=config, mesh=mesh, field=field,
                      frame_times=[0.0] + targets, steps=field.step_count,
                      wall_time=wall, clamp_total=clamp_total,
                      clamp_interior_total=clamp_interior_total,
                      mass_history=mass_history, adapt_reports=adapt_reports,
                      l1_errors=l1_errors)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="granufv",
        description="Finite-volume granular avalanche simulations on "
                    "triangular meshes")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario from a config file")
    runp.add_argument("config", help="path to a key = value config file")
    runp.add_argument("--out", help="output directory (overrides config)")
    runp.add_argument("--no-adapt", action="store_true",
                      help="disable mesh adaptation")
    runp.add_argument("--t-end", type=float, help="override end time")
    runp.add_argument("--write-interval", type=float,
                      help="override output interval")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        config = parse_config(text)
        if args.out:
            config.out_dir = Path(args.out)
        if args.no_adapt:
            config.adapt = False
        if args.t_end is not None:
            if args.t_end <= 0:
                raise ConfigError("t_end must be positive")
            config.t_end = args.t_end
        if args.write_interval is not None:
            if args.write_interval <= 0:
                raise ConfigError("write_interval must be positive")
            config.write_interval = args.write_interval
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        summary = run(config)
    except SolverError as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return 2
    print(f"{config.scenario.name}: {summary.steps} steps to "
          f"t={_FMT.format(summary.field.t)}, "
          f"{summary.mesh.n_cells} cells, wall {summary.wall_time:.1f}s, "
          f"artifacts in {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
