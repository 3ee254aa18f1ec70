"""Command-line front end.

    wfm-ankle gen-synthetic -c config.yaml -o out/     # write synthetic trials
    wfm-ankle simulate      -c config.yaml -o out/     # torque trace per trial
    wfm-ankle optimize      -c config.yaml -o out/     # fit the two amplitudes
    wfm-ankle evaluate      -c config.yaml -o out/     # train/test RMSE report

Every run writes ``manifest.yaml`` (resolved config + seed + version) so it
can be reproduced exactly; identical config and seed give byte-identical
outputs.  Reports and traces are written as CSV plus rendered PNG figures
(``--no-figures`` skips the figures).  Failed runs leave a ``FAILED.txt``
marker next to whatever partial outputs exist.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import (ConfigError, RunConfig, load_run_config, resolve_output_dir,
                     run_config_to_dict)
from .gait_data import (GaitTrial, SubjectSplit, TrialParseError, load_trial,
                        resample_trial, save_trial)
from .geometry import GeometryRangeError
from .muscle import IntegrationError, NoEquilibriumError
from .pipeline import (evaluate_split, make_batch_objective, simulate_gait,
                       subject_params, synthetic_split)
from .pso import NonFiniteObjectiveError, optimize

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERIC_EXIT = 3


class _Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(_USAGE_EXIT)


def _build_parser() -> _Parser:
    parser = _Parser(prog="wfm-ankle",
                     description="Ankle-torque simulation and activation fitting "
                                 "with a lumped winding-filament muscle model.")
    parser.add_argument("--version", action="version", version=f"wfm-ankle {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p):
        p.add_argument("-c", "--config", metavar="FILE",
                       help="YAML run config (defaults apply when omitted)")
        p.add_argument("-o", "--out", metavar="DIR",
                       help="output directory (overrides env and config)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering, write only delimited output")
        p.add_argument("--train", nargs="+", metavar="CSV",
                       help="training trial files (overrides config data.train)")
        p.add_argument("--test", nargs="+", metavar="CSV",
                       help="test trial files (overrides config data.test)")

    common(sub.add_parser("simulate", help="write a torque-trace CSV per trial"))
    common(sub.add_parser("optimize", help="fit the two activation amplitudes by PSO"))
    common(sub.add_parser("evaluate", help="write the train/test RMSE report"))
    gen = sub.add_parser("gen-synthetic", help="generate a synthetic train/test dataset")
    common(gen)
    gen.add_argument("--noise-sd", type=float, default=None, metavar="SD",
                     help="torque noise standard deviation (overrides config)")
    gen.add_argument("--seed", type=int, default=None, metavar="N",
                     help="generation seed (defaults to pso.seed)")
    return parser


def _load_trials(paths, cli_paths) -> list[GaitTrial]:
    chosen = [Path(p) for p in cli_paths] if cli_paths else list(paths)
    return [load_trial(p) for p in chosen]


def _write_manifest(outdir: Path, command: str, cfg: RunConfig) -> None:
    manifest = {"command": command, "version": __version__, "seed": cfg.pso.seed,
                "config": run_config_to_dict(cfg)}
    (outdir / "manifest.yaml").write_text(yaml.safe_dump(manifest, sort_keys=True),
                                          encoding="utf-8")


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_simulate(cfg: RunConfig, args, outdir: Path) -> int:
    trials = (_load_trials(cfg.train_paths, args.train)
              + _load_trials(cfg.test_paths, args.test))
    if not trials:
        raise ConfigError("simulate needs trials: set data.train/data.test or --train/--test")
    grid = np.linspace(0.0, 1.0, cfg.sim.output_grid)
    for trial in trials:
        spec = tuple(subject_params(p, trial, g,
                                    per_subject_f_max=cfg.per_subject_f_max,
                                    calibrate_rest=cfg.calibrate_rest)
                     for p, g in zip(cfg.params, cfg.geoms))
        tau = simulate_gait(trial, cfg.templates, spec, cfg.geoms, cfg.sim)
        ref = resample_trial(trial, cfg.sim.output_grid).tau_ref
        _write_csv(outdir / f"trace_{trial.subject_id}.csv", "phase,tau_model,tau_ref",
                   zip(grid, tau, ref))
        if not args.no_figures:
            from . import plots
            plots.save_torque_figure(
                outdir / f"trace_{trial.subject_id}.png", grid, tau, ref,
                curves={"anterior": cfg.templates[0], "posterior": cfg.templates[1]},
                torque_unit=trial.torque_unit, title=f"subject {trial.subject_id}")
        print(f"wrote trace_{trial.subject_id}.csv")
    return 0


def _cmd_optimize(cfg: RunConfig, args, outdir: Path) -> int:
    trials = _load_trials(cfg.train_paths, args.train)
    if not trials:
        raise ConfigError("optimize needs training trials: set data.train or --train")
    objective = make_batch_objective(trials, cfg.templates, cfg.params, cfg.geoms,
                                     cfg.sim, per_subject_f_max=cfg.per_subject_f_max,
                                     calibrate_rest=cfg.calibrate_rest)
    result = optimize(None, cfg.pso, batch_objective=objective)
    amp_a, amp_p = (float(v) for v in result.best_position)

    _write_csv(outdir / "history.csv", "iteration,best_value",
               zip(range(len(result.history)), result.history))
    fitted = run_config_to_dict(cfg)
    for side, amp in (("anterior", amp_a), ("posterior", amp_p)):
        block = fitted["activation"][side]
        block["amplitudes"][block["peak_index"]] = amp
    # absolute paths keep the snapshot runnable from any directory
    fitted["data"]["train"] = [str(Path(p).resolve()) for p in
                               (args.train if args.train else cfg.train_paths)]
    (outdir / "config_fitted.yaml").write_text(yaml.safe_dump(fitted, sort_keys=True),
                                               encoding="utf-8")
    if not args.no_figures:
        from . import plots
        plots.save_convergence_figure(outdir / "convergence.png", result.history)
    print(f"best amplitudes: anterior={amp_a!r} posterior={amp_p!r}")
    print(f"best objective (mean train RMSE): {result.best_value!r} "
          f"after {result.iterations_run} iterations")
    return 0


def _cmd_evaluate(cfg: RunConfig, args, outdir: Path) -> int:
    split = SubjectSplit(train=tuple(_load_trials(cfg.train_paths, args.train)),
                         test=tuple(_load_trials(cfg.test_paths, args.test)))
    if not split.train or not split.test:
        raise ConfigError("evaluate needs both train and test trials")
    report = evaluate_split(split, cfg.templates, cfg.params, cfg.geoms, cfg.sim,
                            per_subject_f_max=cfg.per_subject_f_max,
                            calibrate_rest=cfg.calibrate_rest)
    (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (outdir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    if not args.no_figures:
        from . import plots
        plots.save_report_figure(outdir / "report.png", report)
    print(report.to_text(), end="")
    return 0


def _cmd_gen_synthetic(cfg: RunConfig, args, outdir: Path) -> int:
    noise_sd = cfg.noise_sd if args.noise_sd is None else args.noise_sd
    seed = cfg.pso.seed if args.seed is None else args.seed
    split = synthetic_split(cfg.templates, cfg.params, cfg.geoms, sim=cfg.sim,
                            seed=seed, noise_sd=noise_sd,
                            per_subject_f_max=cfg.per_subject_f_max,
                            calibrate_rest=cfg.calibrate_rest)
    trial_dir = outdir / "trials"
    trial_dir.mkdir(parents=True, exist_ok=True)
    for tag, trials in (("train", split.train), ("test", split.test)):
        for trial in trials:
            path = trial_dir / f"{trial.subject_id}.csv"
            save_trial(trial, path)
            print(f"wrote {path} ({tag})")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "optimize": _cmd_optimize,
    "evaluate": _cmd_evaluate,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    outdir: Path | None = None
    try:
        cfg = load_run_config(args.config)
        outdir = resolve_output_dir(cfg, args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        marker = outdir / "FAILED.txt"
        if marker.exists():
            marker.unlink()
        _write_manifest(outdir, args.command, cfg)
        return _COMMANDS[args.command](cfg, args, outdir)
    except (IntegrationError, NoEquilibriumError, NonFiniteObjectiveError,
            GeometryRangeError) as exc:
        _report_failure(outdir, exc)
        return _NUMERIC_EXIT
    except (ConfigError, TrialParseError, FileNotFoundError, ValueError) as exc:
        _report_failure(outdir, exc)
        return _DATA_EXIT


def _report_failure(outdir: Path | None, exc: Exception) -> None:
    print(f"error: {exc}", file=sys.stderr)
    if outdir is not None and outdir.is_dir():
        (outdir / "FAILED.txt").write_text(f"{type(exc).__name__}: {exc}\n",
                                           encoding="utf-8")


if __name__ == "__main__":
    sys.exit(main())
