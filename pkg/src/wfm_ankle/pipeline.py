"""End-to-end gait simulation, synthetic-data generation, and reporting.

The driver advances both virtual muscles through ``warmup_cycles`` full gait
cycles from a static-equilibrium start, then records net ankle torque on a
uniform phase grid over one further cycle.  Everything is integrated with
fixed-step classical RK4; sub-steps inside the recorded cycle are aligned
with the output grid so traces are sampled at exact grid phases.

Internally the integration state is an array over (muscle, trial, particle),
which lets one call simulate a whole PSO swarm across all training trials in
lock-step.  The public single-trial API is the one-particle special case, so
both routes share every line of arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace, fields as dc_fields
from typing import Callable, Sequence

import numpy as np

from .activation import ActivationCurve, evaluate_activation, single_node_curve
from .gait_data import GaitTrial, SubjectSplit, resample_trial, rmse
from .geometry import AttachmentGeometry, GeometryRangeError, moment_arm, muscle_length
from .muscle import (IntegrationError, WfmParams, equilibrium_ce_length,
                     f_max_from_mass, rest_lengths, rk4_advance)

DEFAULT_OUTPUT_GRID = 101


@dataclass(frozen=True)
class SimulationConfig:
    steps_per_cycle: int = 2000
    warmup_cycles: int = 2
    output_grid: int = DEFAULT_OUTPUT_GRID

    def __post_init__(self) -> None:
        if self.steps_per_cycle < 100:
            raise ValueError("steps_per_cycle must be >= 100")
        if self.warmup_cycles < 0:
            raise ValueError("warmup_cycles must be >= 0")
        if self.output_grid < 2:
            raise ValueError("output_grid must be >= 2")


@dataclass(frozen=True)
class ReportRow:
    subject_id: str
    split: str   # "train" or "test"
    sex: str
    rmse: float


@dataclass(frozen=True)
class EvaluationReport:
    """Per-subject RMSE table with split means (the headline result)."""

    rows: tuple[ReportRow, ...]
    train_mean: float
    test_mean: float
    torque_unit: str

    @classmethod
    def from_rows(cls, rows: Sequence[ReportRow], torque_unit: str) -> "EvaluationReport":
        rows = tuple(rows)
        train = [r.rmse for r in rows if r.split == "train"]
        test = [r.rmse for r in rows if r.split == "test"]
        if not train or not test:
            raise ValueError("report needs at least one train and one test row")
        return cls(rows=rows, train_mean=float(np.mean(train)),
                   test_mean=float(np.mean(test)), torque_unit=torque_unit)

    def to_text(self) -> str:
        """Aligned wide-format table: subjects as columns, split means below."""
        labels = ["split", "subject", f"rmse [{self.torque_unit}]"]
        cols = [[r.split, f"{r.subject_id}-{r.sex}", f"{r.rmse:.2f}"] for r in self.rows]
        label_w = max(len(s) for s in labels) + 2
        col_w = max(len(cell) for col in cols for cell in col) + 2
        lines = [labels[i].ljust(label_w) + "".join(c[i].ljust(col_w) for c in cols)
                 for i in range(len(labels))]
        lines.append("")
        lines.append(f"train mean: {self.train_mean:.2f}")
        lines.append(f"test mean:  {self.test_mean:.2f}")
        lines.append("F = female subject, M = male subject")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = ["subject_id,split,sex,rmse"]
        for r in self.rows:
            out.append(f"{r.subject_id},{r.split},{r.sex},{float(r.rmse)!r}")
        out.append(f"mean,train,,{float(self.train_mean)!r}")
        out.append(f"mean,test,,{float(self.test_mean)!r}")
        return "\n".join(out) + "\n"


def default_theta_profile(phase):
    """Smooth periodic ankle-angle profile used for synthetic trials, rad."""
    p = np.asarray(phase, dtype=float)
    return (0.02 + 0.15 * np.sin(2 * np.pi * p - 1.8)
            + 0.07 * np.sin(4 * np.pi * p + 0.6))


def subject_params(base: WfmParams, trial: GaitTrial, geom: AttachmentGeometry, *,
                   per_subject_f_max: bool = True,
                   calibrate_rest: bool = True) -> WfmParams:
    """Specialize shared muscle constants to one subject's trial.

    Peak force follows the five-times-body-weight rule and the rest lengths
    are re-split so the chain sits exactly at rest at the trial's mean ankle
    angle; either adjustment can be disabled to honor explicit values.
    """
    p = base
    if per_subject_f_max:
        p = replace(p, f_max=f_max_from_mass(trial.body_mass))
    if calibrate_rest:
        theta_ref = float(np.trapezoid(trial.theta, trial.phase))
        l_t, l_ts, l_ce = rest_lengths(float(muscle_length(theta_ref, geom)))
        p = replace(p, l_t_slack=l_t, l_ts_rest=l_ts, l_ce_opt=l_ce)
    return p


# ---------------------------------------------------------------------------
# vectorized integration engine
# ---------------------------------------------------------------------------

def _record_plan(grid: np.ndarray, steps_per_cycle: int):
    """Sub-step schedule for the recorded cycle, aligned with the grid.

    Returns (stage_phases, steps, record_idx): stages hold phase values at
    every step boundary and midpoint; steps is a list of (stage_index,
    phase_width) per RK4 step; record_idx[k] is the stage index of grid[k].
    """
    stages = [float(grid[0])]
    steps: list[tuple[int, float]] = []
    record_idx = [0]
    for k in range(len(grid) - 1):
        span = float(grid[k + 1] - grid[k])
        m = max(1, round(steps_per_cycle * span))
        h = span / m
        for j in range(m):
            base = float(grid[k]) + j * h
            steps.append((len(stages) - 1, h))
            stages.append(base + 0.5 * h)
            stages.append(base + h)
        stages[-1] = float(grid[k + 1])  # kill accumulated rounding
        record_idx.append(len(stages) - 1)
    return np.asarray(stages), steps, record_idx


def _stack_params(pairs: Sequence[tuple[WfmParams, WfmParams]]) -> WfmParams:
    """Pack per-trial (anterior, posterior) params into (2, T, 1) arrays."""
    values = {}
    for f in dc_fields(WfmParams):
        arr = np.array([[getattr(pa, f.name), getattr(pp, f.name)]
                        for pa, pp in pairs], dtype=float)   # (T, 2)
        values[f.name] = arr.T[:, :, None]                   # (2, T, 1)
    return WfmParams(**values)


def _muscle_lengths(theta: np.ndarray, geom: AttachmentGeometry,
                    stage_phases: np.ndarray, trial_ids: Sequence[str]) -> np.ndarray:
    try:
        return muscle_length(theta, geom)
    except GeometryRangeError:
        phi = geom.phi_neutral + geom.sign * theta
        bad = np.argwhere(~((phi > 0) & (phi < np.pi)))[0]
        raise GeometryRangeError(
            f"{geom.side} geometry out of range for trial "
            f"{trial_ids[bad[1]]!r} at phase {stage_phases[bad[0]]:.4f}") from None


def _stage_lengths(stage_phases: np.ndarray, trials: Sequence[GaitTrial],
                   geoms: tuple[AttachmentGeometry, AttachmentGeometry]) -> np.ndarray:
    """Muscle-tendon lengths at every stage phase, shape (S, 2, T, 1)."""
    theta = np.stack([np.interp(stage_phases, tr.phase, tr.theta) for tr in trials],
                     axis=1)                                 # (S, T)
    ids = [tr.subject_id for tr in trials]
    lm = np.stack([_muscle_lengths(theta, g, stage_phases, ids) for g in geoms],
                  axis=1)                                    # (S, 2, T)
    return lm[:, :, :, None]


def _torque_weights(grid: np.ndarray, trials: Sequence[GaitTrial],
                    geoms: tuple[AttachmentGeometry, AttachmentGeometry]) -> np.ndarray:
    """Signed moment arms at grid phases, shape (G, 2, T, 1)."""
    theta = np.stack([np.interp(grid, tr.phase, tr.theta) for tr in trials], axis=1)
    w_a = moment_arm(theta, geoms[0])
    w_p = -moment_arm(theta, geoms[1])
    return np.stack([w_a, w_p], axis=1)[:, :, :, None]


def _chain_force_clamped(l_mtu, l_ce, a, p: WfmParams):
    k_ts = p.k_ts_passive + a * p.k_ts_active
    stretch = l_mtu - l_ce - p.l_t_slack
    l_ts = (p.k_ss * stretch + k_ts * p.l_ts_rest) / (p.k_ss + k_ts)
    return np.maximum(p.k_ss * (stretch - l_ts), 0.0)


class _Engine:
    """Precomputed stage inputs for repeated simulation of the same trials."""

    def __init__(self, trials: Sequence[GaitTrial],
                 geoms: tuple[AttachmentGeometry, AttachmentGeometry],
                 sim: SimulationConfig):
        self.trials = list(trials)
        self.geoms = geoms
        self.sim = sim
        self.grid = np.linspace(0.0, 1.0, sim.output_grid)
        n = sim.steps_per_cycle
        self.stage_w = np.linspace(0.0, 1.0, 2 * n + 1)
        self.stage_r, self.steps_r, self.record_idx = _record_plan(self.grid, n)
        self.lm_w = _stage_lengths(self.stage_w, self.trials, geoms)
        self.lm_r = _stage_lengths(self.stage_r, self.trials, geoms)
        self.weights = _torque_weights(self.grid, self.trials, geoms)
        self.durations = np.array([tr.cycle_duration for tr in self.trials],
                                  dtype=float).reshape(1, -1, 1)

    def _fail(self, lce: np.ndarray, phase: float) -> None:
        bad = np.argwhere(~np.isfinite(lce))
        trial = self.trials[bad[0][1]].subject_id if len(bad) else "?"
        raise IntegrationError(
            f"non-finite muscle state for trial {trial!r} at phase {phase:.4f}")

    def activation_stages(self, curves: tuple[ActivationCurve, ActivationCurve],
                          stage_phases: np.ndarray) -> np.ndarray:
        a = np.stack([evaluate_activation(c, stage_phases) for c in curves], axis=1)
        return a[:, :, None, None]                           # (S, 2, 1, 1)

    def run(self, a_w: np.ndarray, a_r: np.ndarray, p_arr: WfmParams) -> np.ndarray:
        """Integrate warmup + recorded cycle; returns torque (T, P, G)."""
        sim = self.sim
        lce = equilibrium_ce_length(self.lm_w[0], a_w[0], p_arr)
        lce = np.asarray(lce, dtype=float)

        dt_w = (1.0 / sim.steps_per_cycle) * self.durations
        for _ in range(sim.warmup_cycles):
            for k in range(sim.steps_per_cycle):
                j = 2 * k
                lce = rk4_advance(lce, dt_w,
                                  (self.lm_w[j], self.lm_w[j + 1], self.lm_w[j + 2]),
                                  (a_w[j], a_w[j + 1], a_w[j + 2]), p_arr)
                if not np.isfinite(lce).all():
                    self._fail(lce, self.stage_w[j + 2])

        shape = np.broadcast_shapes(lce.shape, a_r.shape[1:])
        out = np.empty((len(self.grid),) + shape[1:])        # (G, T, P)

        def record(gi: int, lce_now: np.ndarray) -> None:
            s = self.record_idx[gi]
            force = _chain_force_clamped(self.lm_r[s], lce_now, a_r[s], p_arr)
            out[gi] = (self.weights[gi] * force).sum(axis=0)

        record(0, lce)
        gi = 1
        for idx, h in self.steps_r:
            lce = rk4_advance(lce, h * self.durations,
                              (self.lm_r[idx], self.lm_r[idx + 1], self.lm_r[idx + 2]),
                              (a_r[idx], a_r[idx + 1], a_r[idx + 2]), p_arr)
            if not np.isfinite(lce).all():
                self._fail(lce, self.stage_r[idx + 2])
            if idx + 2 == self.record_idx[gi]:
                record(gi, lce)
                gi += 1
        return np.moveaxis(out, 0, -1)                       # (T, P, G)


def simulate_gait(trial: GaitTrial,
                  curves: tuple[ActivationCurve, ActivationCurve],
                  params: tuple[WfmParams, WfmParams],
                  geoms: tuple[AttachmentGeometry, AttachmentGeometry],
                  sim: SimulationConfig | None = None) -> np.ndarray:
    """Net ankle torque on the output phase grid for one trial.

    The ankle angle is interpolated linearly between the trial's samples;
    muscle parameters are used exactly as given (apply ``subject_params``
    first for per-subject scaling).
    """
    sim = sim or SimulationConfig()
    engine = _Engine([trial], geoms, sim)
    a_w = engine.activation_stages(curves, engine.stage_w)
    a_r = engine.activation_stages(curves, engine.stage_r)
    p_arr = _stack_params([params])
    return engine.run(a_w, a_r, p_arr)[0, 0]


def make_batch_objective(trials: Sequence[GaitTrial],
                         templates: tuple[ActivationCurve, ActivationCurve],
                         params: tuple[WfmParams, WfmParams],
                         geoms: tuple[AttachmentGeometry, AttachmentGeometry],
                         sim: SimulationConfig | None = None, *,
                         per_subject_f_max: bool = True,
                         calibrate_rest: bool = True,
                         ) -> Callable[[np.ndarray], np.ndarray]:
    """Build the swarm-ready fit objective over (anterior, posterior) amplitudes.

    The returned callable maps an (n, 2) amplitude matrix to the n mean-RMSE
    values across the given trials, simulating all rows in one pass.  Stage
    inputs are precomputed once, so repeated calls only pay for integration.
    """
    if not trials:
        raise ValueError("at least one trial is required")
    sim = sim or SimulationConfig()
    engine = _Engine(trials, geoms, sim)
    pairs = [tuple(subject_params(p, tr, g, per_subject_f_max=per_subject_f_max,
                                  calibrate_rest=calibrate_rest)
                   for p, g in zip(params, geoms))
             for tr in trials]
    p_arr = _stack_params(pairs)

    base_w, base_r, tent_w, tent_r = [], [], [], []
    for t in templates:
        lo_w = evaluate_activation(single_node_curve(t, 0.0), engine.stage_w)
        hi_w = evaluate_activation(single_node_curve(t, 1.0), engine.stage_w)
        lo_r = evaluate_activation(single_node_curve(t, 0.0), engine.stage_r)
        hi_r = evaluate_activation(single_node_curve(t, 1.0), engine.stage_r)
        base_w.append(lo_w)
        base_r.append(lo_r)
        tent_w.append(hi_w - lo_w)
        tent_r.append(hi_r - lo_r)
    base_w = np.stack(base_w, axis=1)[:, :, None, None]      # (S, 2, 1, 1)
    base_r = np.stack(base_r, axis=1)[:, :, None, None]
    tent_w = np.stack(tent_w, axis=1)[:, :, None, None]
    tent_r = np.stack(tent_r, axis=1)[:, :, None, None]

    ref = np.stack([resample_trial(tr, sim.output_grid).tau_ref for tr in trials])
    ref = ref[:, None, :]                                    # (T, 1, G)

    def objective(amplitudes: np.ndarray) -> np.ndarray:
        amp = np.asarray(amplitudes, dtype=float)
        if amp.ndim != 2 or amp.shape[1] != 2:
            raise ValueError("amplitudes must have shape (n, 2)")
        if np.any((amp < 0) | (amp > 1)):
            raise ValueError("amplitudes must lie in [0, 1]")
        amp_m = amp.T[:, None, :]                            # (2, 1, P)
        a_w = base_w + tent_w * amp_m                        # (S, 2, 1, P)
        a_r = base_r + tent_r * amp_m
        tau = engine.run(a_w, a_r, p_arr)                    # (T, P, G)
        err = np.sqrt(np.mean((tau - ref) ** 2, axis=-1))    # (T, P)
        return err.mean(axis=0)                              # (P,)

    return objective


def batch_fit_objective(amplitudes, trials, templates, params, geoms,
                        sim: SimulationConfig | None = None, *,
                        per_subject_f_max: bool = True,
                        calibrate_rest: bool = True) -> np.ndarray:
    """One-shot form of :func:`make_batch_objective` for ad-hoc evaluations."""
    objective = make_batch_objective(trials, templates, params, geoms, sim,
                                     per_subject_f_max=per_subject_f_max,
                                     calibrate_rest=calibrate_rest)
    return objective(amplitudes)


def generate_synthetic_trial(curves, params, geoms, theta_profile,
                             noise_sd: float, seed: int, *,
                             subject_id: str = "synthetic", sex: str = "M",
                             body_mass: float = 70.0, walking_speed: float = 1.25,
                             cycle_duration: float = 1.1,
                             torque_unit: str = "N*m",
                             sim: SimulationConfig | None = None,
                             per_subject_f_max: bool = True,
                             calibrate_rest: bool = True) -> GaitTrial:
    """Simulate a reference trial and overlay Gaussian torque noise.

    The same per-subject parameter rule as the fitting path is applied, so a
    zero-noise trial scores an exactly-zero objective at its own amplitudes.
    """
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    sim = sim or SimulationConfig()
    grid = np.linspace(0.0, 1.0, sim.output_grid)
    theta = np.asarray(theta_profile(grid), dtype=float)
    if theta.shape != grid.shape:
        theta = np.array([float(theta_profile(p)) for p in grid])
    trial = GaitTrial(subject_id=subject_id, sex=sex, body_mass=body_mass,
                      walking_speed=walking_speed, cycle_duration=cycle_duration,
                      phase=grid, theta=theta, tau_ref=np.zeros_like(grid),
                      torque_unit=torque_unit)
    spec = tuple(subject_params(p, trial, g, per_subject_f_max=per_subject_f_max,
                                calibrate_rest=calibrate_rest)
                 for p, g in zip(params, geoms))
    tau = simulate_gait(trial, curves, spec, geoms, sim)
    if noise_sd > 0:
        tau = tau + np.random.default_rng(seed).normal(0.0, noise_sd, tau.shape)
    return replace(trial, tau_ref=tau)


# (subject_id, split, sex, body_mass kg, cycle_duration s); sex pattern follows
# the four-train / four-test roster the reference torques were reported for.
DEFAULT_ROSTER = (
    ("train-1", "train", "F", 58.0, 1.04),
    ("train-2", "train", "F", 64.0, 1.12),
    ("train-3", "train", "M", 82.0, 1.16),
    ("train-4", "train", "M", 77.0, 1.08),
    ("test-1", "test", "F", 61.0, 1.06),
    ("test-2", "test", "F", 66.0, 1.10),
    ("test-3", "test", "M", 88.0, 1.18),
    ("test-4", "test", "F", 59.0, 1.02),
)


def _draw_theta_profile(rng) -> Callable[[np.ndarray], np.ndarray]:
    c0 = rng.uniform(-0.03, 0.03)
    a1 = rng.uniform(0.10, 0.17)
    ph1 = rng.uniform(-2.2, -1.4)
    a2 = rng.uniform(0.04, 0.09)
    ph2 = rng.uniform(0.2, 1.0)

    def profile(phase):
        p = np.asarray(phase, dtype=float)
        return c0 + a1 * np.sin(2 * np.pi * p + ph1) + a2 * np.sin(4 * np.pi * p + ph2)

    return profile


def synthetic_split(curves, params, geoms, *,
                    sim: SimulationConfig | None = None, seed: int = 42,
                    noise_sd: float = 0.0, roster=DEFAULT_ROSTER,
                    torque_unit: str = "N*m",
                    per_subject_f_max: bool = True,
                    calibrate_rest: bool = True) -> SubjectSplit:
    """Generate a full train/test dataset of synthetic subjects.

    Each subject gets its own smooth ankle-angle profile and noise stream,
    all derived deterministically from ``seed``.
    """
    rng = np.random.default_rng(seed)
    child_seeds = np.random.SeedSequence(seed).generate_state(len(roster))
    train, test = [], []
    for (sid, split, sex, mass, duration), child in zip(roster, child_seeds):
        profile = _draw_theta_profile(rng)
        trial = generate_synthetic_trial(
            curves, params, geoms, profile, noise_sd, int(child),
            subject_id=sid, sex=sex, body_mass=mass, cycle_duration=duration,
            torque_unit=torque_unit, sim=sim,
            per_subject_f_max=per_subject_f_max, calibrate_rest=calibrate_rest)
        (train if split == "train" else test).append(trial)
    return SubjectSplit(train=tuple(train), test=tuple(test))


def evaluate_split(split: SubjectSplit, curves, params, geoms,
                   sim: SimulationConfig | None = None, *,
                   per_subject_f_max: bool = True,
                   calibrate_rest: bool = True) -> EvaluationReport:
    """Simulate every subject and tabulate train/test RMSE with split means."""
    if not split.train or not split.test:
        raise ValueError("both train and test must be non-empty")
    sim = sim or SimulationConfig()
    trials = list(split.train) + list(split.test)
    tags = ["train"] * len(split.train) + ["test"] * len(split.test)

    units = {tr.torque_unit for tr in trials}
    if len(units) > 1:
        raise ValueError(f"trials disagree on torque_unit: {sorted(units)}")

    rows = []
    for trial, tag in zip(trials, tags):
        spec = tuple(subject_params(p, trial, g, per_subject_f_max=per_subject_f_max,
                                    calibrate_rest=calibrate_rest)
                     for p, g in zip(params, geoms))
        tau = simulate_gait(trial, curves, spec, geoms, sim)
        ref = resample_trial(trial, sim.output_grid).tau_ref
        rows.append(ReportRow(subject_id=trial.subject_id, split=tag,
                              sex=trial.sex, rmse=rmse(tau, ref)))
    return EvaluationReport.from_rows(rows, torque_unit=units.pop())
