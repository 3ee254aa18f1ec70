"""Run configuration: one YAML file per experiment.

Every block is optional; missing values fall back to the package defaults,
so ``{}`` is a valid config.  Paths in ``data`` are checked for existence at
load time and all numeric fields are validated eagerly with field-level
messages.  See ``configs/example.yaml`` for a commented schema.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, asdict
from pathlib import Path

import yaml

from .activation import (ActivationCurve, default_anterior_template,
                         default_posterior_template)
from .geometry import AttachmentGeometry, default_geometry, muscle_length
from .muscle import WfmParams, default_params
from .pipeline import SimulationConfig
from .pso import PsoConfig

OUTPUT_DIR_ENV = "WFM_ANKLE_OUTDIR"
_SIDES = ("anterior", "posterior")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    params: tuple[WfmParams, WfmParams]                 # (anterior, posterior)
    geoms: tuple[AttachmentGeometry, AttachmentGeometry]
    templates: tuple[ActivationCurve, ActivationCurve]
    pso: PsoConfig
    sim: SimulationConfig
    train_paths: tuple[Path, ...]
    test_paths: tuple[Path, ...]
    output_dir: Path
    per_subject_f_max: bool
    calibrate_rest: bool
    noise_sd: float


def _expect_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(value).__name__}")
    return value


def _pop_number(block: dict, key: str, default, where: str) -> float:
    value = block.pop(key, default)
    if isinstance(value, str):
        # YAML 1.1 reads exponents like 1.0e5 (no sign) as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def _reject_unknown(block: dict, where: str) -> None:
    if block:
        raise ConfigError(f"{where}: unknown keys {sorted(block)}")


def _build_geometry(raw: dict, side: str) -> AttachmentGeometry:
    where = f"geometry.{side}"
    block = dict(_expect_mapping(raw.get(side), where))
    base = default_geometry(side)
    r_o = _pop_number(block, "r_origin", base.r_origin, where)
    r_i = _pop_number(block, "r_insertion", base.r_insertion, where)
    phi = _pop_number(block, "phi_neutral_deg", math.degrees(base.phi_neutral), where)
    _reject_unknown(block, where)
    try:
        return AttachmentGeometry(r_origin=r_o, r_insertion=r_i,
                                  phi_neutral=math.radians(phi), side=side)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_params(raw: dict, side: str, geom: AttachmentGeometry) -> tuple[WfmParams, bool, bool]:
    """Returns (params, f_max_given, lengths_given)."""
    where = f"muscles.{side}"
    block = dict(_expect_mapping(raw.get(side), where))
    base = default_params(side, float(muscle_length(0.0, geom)))
    f_max_given = "f_max" in block
    lengths_given = any(k in block for k in ("l_t_slack", "l_ts_rest", "l_ce_opt"))
    kwargs = {}
    for key in ("k_ss", "k_ts_passive", "k_ts_active", "c_ce", "f_max",
                "l_t_slack", "l_ts_rest", "l_ce_opt", "fl_width"):
        kwargs[key] = _pop_number(block, key, getattr(base, key), where)
    _reject_unknown(block, where)
    try:
        return WfmParams(**kwargs), f_max_given, lengths_given
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_template(raw: dict, side: str) -> ActivationCurve:
    where = f"activation.{side}"
    block = dict(_expect_mapping(raw.get(side), where))
    default = (default_anterior_template() if side == "anterior"
               else default_posterior_template())
    phases = block.pop("phases", list(default.phases))
    amplitudes = block.pop("amplitudes", list(default.amplitudes))
    peak_index = block.pop("peak_index", default.peak_index)
    _reject_unknown(block, where)
    if not isinstance(phases, (list, tuple)) or not isinstance(amplitudes, (list, tuple)):
        raise ConfigError(f"{where}: phases and amplitudes must be lists")
    if not isinstance(peak_index, int) or isinstance(peak_index, bool):
        raise ConfigError(f"{where}.peak_index: expected an integer")
    try:
        return ActivationCurve(phases=tuple(float(v) for v in phases),
                               amplitudes=tuple(float(v) for v in amplitudes),
                               peak_index=peak_index)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _build_pso(raw: dict) -> PsoConfig:
    block = dict(_expect_mapping(raw, "pso"))
    default = PsoConfig()
    bounds = block.pop("bounds", [list(b) for b in default.bounds])
    if (not isinstance(bounds, (list, tuple))
            or any(not isinstance(b, (list, tuple)) or len(b) != 2 for b in bounds)):
        raise ConfigError("pso.bounds: expected a list of [lo, hi] pairs")
    seed = block.pop("seed", default.seed)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("pso.seed: expected an integer")
    kwargs = dict(
        swarm_size=int(_pop_number(block, "swarm_size", default.swarm_size, "pso")),
        inertia=_pop_number(block, "inertia", default.inertia, "pso"),
        cognitive=_pop_number(block, "cognitive", default.cognitive, "pso"),
        social=_pop_number(block, "social", default.social, "pso"),
        max_iterations=int(_pop_number(block, "max_iterations",
                                       default.max_iterations, "pso")),
        target_tolerance=_pop_number(block, "target_tolerance",
                                     default.target_tolerance, "pso"),
    )
    _reject_unknown(block, "pso")
    try:
        return PsoConfig(bounds=tuple((float(lo), float(hi)) for lo, hi in bounds),
                         seed=seed, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"pso: {exc}") from None


def _build_sim(raw: dict) -> SimulationConfig:
    block = dict(_expect_mapping(raw, "simulation"))
    default = SimulationConfig()
    kwargs = dict(
        steps_per_cycle=int(_pop_number(block, "steps_per_cycle",
                                        default.steps_per_cycle, "simulation")),
        warmup_cycles=int(_pop_number(block, "warmup_cycles",
                                      default.warmup_cycles, "simulation")),
        output_grid=int(_pop_number(block, "output_grid",
                                    default.output_grid, "simulation")),
    )
    _reject_unknown(block, "simulation")
    try:
        return SimulationConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from None


def _build_paths(raw, where: str, base_dir: Path) -> tuple[Path, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of paths")
    paths = []
    for item in raw:
        if not isinstance(item, str):
            raise ConfigError(f"{where}: expected path strings, got {item!r}")
        path = Path(item)
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"{where}: path does not exist: {path}")
        paths.append(path)
    return tuple(paths)


def load_run_config(path=None) -> RunConfig:
    """Load and validate a YAML run config; ``None`` yields pure defaults."""
    if path is None:
        raw: dict = {}
        base_dir = Path.cwd()
    else:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file does not exist: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from None
        raw = _expect_mapping(raw, str(path))
        base_dir = path.parent
    raw = dict(raw)

    geometry_raw = _expect_mapping(raw.pop("geometry", None), "geometry")
    muscles_raw = _expect_mapping(raw.pop("muscles", None), "muscles")
    activation_raw = _expect_mapping(raw.pop("activation", None), "activation")
    for block, where in ((geometry_raw, "geometry"), (muscles_raw, "muscles"),
                         (activation_raw, "activation")):
        unknown = set(block) - set(_SIDES)
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")

    geoms = tuple(_build_geometry(geometry_raw, side) for side in _SIDES)
    built = [_build_params(muscles_raw, side, geom)
             for side, geom in zip(_SIDES, geoms)]
    params = tuple(b[0] for b in built)
    any_f_max_given = any(b[1] for b in built)
    any_lengths_given = any(b[2] for b in built)
    templates = tuple(_build_template(activation_raw, side) for side in _SIDES)

    pso = _build_pso(raw.pop("pso", None))
    sim = _build_sim(raw.pop("simulation", None))

    data = _expect_mapping(raw.pop("data", None), "data")
    train = _build_paths(data.pop("train", None), "data.train", base_dir)
    test = _build_paths(data.pop("test", None), "data.test", base_dir)
    _reject_unknown(data, "data")

    output_dir = raw.pop("output_dir", "runs")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")

    # Explicit values win over the per-subject rules unless the flag says
    # otherwise; an omitted flag defaults to "derive it per subject".
    per_subject = raw.pop("per_subject_f_max", not any_f_max_given)
    calibrate = raw.pop("calibrate_rest_lengths", not any_lengths_given)
    for name, flag in (("per_subject_f_max", per_subject),
                       ("calibrate_rest_lengths", calibrate)):
        if not isinstance(flag, bool):
            raise ConfigError(f"{name}: expected a boolean")

    noise_sd = _pop_number(raw, "noise_sd", 0.0, "config")
    if noise_sd < 0:
        raise ConfigError("noise_sd: must be >= 0")
    _reject_unknown(raw, "config")

    return RunConfig(params=params, geoms=geoms, templates=templates, pso=pso,
                     sim=sim, train_paths=train, test_paths=test,
                     output_dir=Path(output_dir), per_subject_f_max=per_subject,
                     calibrate_rest=calibrate, noise_sd=noise_sd)


def run_config_to_dict(cfg: RunConfig) -> dict:
    """Fully-resolved plain-dict form (what the manifest and snapshots store)."""
    return {
        "muscles": {side: {k: float(v) for k, v in asdict(p).items()}
                    for side, p in zip(_SIDES, cfg.params)},
        "geometry": {side: {"r_origin": float(g.r_origin),
                            "r_insertion": float(g.r_insertion),
                            "phi_neutral_deg": math.degrees(g.phi_neutral)}
                     for side, g in zip(_SIDES, cfg.geoms)},
        "activation": {side: {"phases": [float(v) for v in t.phases],
                              "amplitudes": [float(v) for v in t.amplitudes],
                              "peak_index": t.peak_index}
                       for side, t in zip(_SIDES, cfg.templates)},
        "pso": {"swarm_size": cfg.pso.swarm_size, "inertia": cfg.pso.inertia,
                "cognitive": cfg.pso.cognitive, "social": cfg.pso.social,
                "max_iterations": cfg.pso.max_iterations,
                "target_tolerance": cfg.pso.target_tolerance,
                "seed": cfg.pso.seed,
                "bounds": [[lo, hi] for lo, hi in cfg.pso.bounds]},
        "simulation": {"steps_per_cycle": cfg.sim.steps_per_cycle,
                       "warmup_cycles": cfg.sim.warmup_cycles,
                       "output_grid": cfg.sim.output_grid},
        "data": {"train": [str(p) for p in cfg.train_paths],
                 "test": [str(p) for p in cfg.test_paths]},
        "output_dir": str(cfg.output_dir),
        "per_subject_f_max": cfg.per_subject_f_max,
        "calibrate_rest_lengths": cfg.calibrate_rest,
        "noise_sd": cfg.noise_sd,
    }


def resolve_output_dir(cfg: RunConfig, cli_value: str | None) -> Path:
    """Precedence: CLI flag, then the environment override, then the config."""
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return cfg.output_dir
