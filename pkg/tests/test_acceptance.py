"""Acceptance suite: one test per headline criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import time
from pathlib import Path

import numpy as np
import pytest
import yaml

from wfm_ankle import (EvaluationReport, PsoConfig, ReportRow, SimulationConfig,
                       WfmParams, ce_velocity, equilibrium_ce_length, f_max_from_mass,
                       make_batch_objective, moment_arm, muscle_length, optimize,
                       rest_lengths, simulate_gait, solve_internal_balance,
                       subject_params, synthetic_split, titin_stiffness)
from wfm_ankle.cli import main as cli_main
from wfm_ankle.geometry import AttachmentGeometry
from wfm_ankle.muscle import rk4_advance

PAPER_TRAIN = (118.95, 167.23, 213.85, 119.08)
PAPER_TEST = (102.16, 110.88, 163.59, 139.67)
REPORTED_TRAIN_MEAN = 154.78
REPORTED_TEST_MEAN = 129.07
REPORTED_AMPLITUDES = (0.05, 0.10)


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_table_arithmetic():
    with Timer() as t:
        rows = [ReportRow(f"train-{i+1}", "train", s, v)
                for i, (s, v) in enumerate(zip("FFMM", PAPER_TRAIN))]
        rows += [ReportRow(f"test-{i+1}", "test", s, v)
                 for i, (s, v) in enumerate(zip("FFMF", PAPER_TEST))]
        rep = EvaluationReport.from_rows(rows, torque_unit="as-supplied")
    ok = (abs(rep.train_mean - REPORTED_TRAIN_MEAN) <= 0.01
          and abs(rep.test_mean - REPORTED_TEST_MEAN) <= 0.01
          and t.elapsed < 1.0)
    report("criterion 1 (report arithmetic)", ok,
           f"train_mean={rep.train_mean:.4f} test_mean={rep.test_mean:.4f} "
           f"runtime={t.elapsed:.3f}s")


def test_criterion_2_activation_round_trip(params, geoms, templates, curves_at_optima):
    sim = SimulationConfig(steps_per_cycle=200, warmup_cycles=1, output_grid=101)
    cfg = PsoConfig(target_tolerance=1e-5)  # every swarm constant at its default
    with Timer() as t:
        split = synthetic_split(curves_at_optima, params, geoms, sim=sim,
                                seed=42, noise_sd=0.0)
        objective = make_batch_objective(split.train, templates, params, geoms, sim)
        res = optimize(None, cfg, batch_objective=objective)

        sigma = 2.0
        noisy = synthetic_split(curves_at_optima, params, geoms, sim=sim,
                                seed=42, noise_sd=sigma)
        noisy_objective = make_batch_objective(noisy.train, templates, params, geoms, sim)
        noisy_res = optimize(None, cfg, batch_objective=noisy_objective)

    rel_err = [abs(a - b) / b for a, b in zip(res.best_position, REPORTED_AMPLITUDES)]
    ok = (max(rel_err) <= 0.05 and res.best_value <= 1e-4
          and 0.8 * sigma <= noisy_res.best_value <= 1.2 * sigma
          and t.elapsed < 60.0)
    report("criterion 2 (round trip)", ok,
           f"amplitudes={np.round(res.best_position, 6).tolist()} "
           f"objective={res.best_value:.2e} noisy_objective={noisy_res.best_value:.3f} "
           f"(sigma={sigma}) runtime={t.elapsed:.1f}s")


def test_criterion_3_f_max_rule():
    value = f_max_from_mass(70.0)
    ok = abs(value - 3432.33) <= 0.01
    report("criterion 3 (peak-force rule)", ok, f"f_max(70 kg)={value:.4f} N")


def test_criterion_4_mechanics_oracles():
    rng = np.random.default_rng(20260809)
    n = 100
    with Timer() as t:
        # randomized parameter draws shared by the force-balance and
        # relaxation oracles
        l_ref = rng.uniform(0.25, 0.45, n)
        lengths = rest_lengths(l_ref)
        k_ss = np.exp(rng.uniform(np.log(5e4), np.log(3e5), n))
        draws = WfmParams(k_ss=k_ss,
                          k_ts_passive=rng.uniform(0.02, 0.10, n) * k_ss,
                          k_ts_active=rng.uniform(0.20, 0.60, n) * k_ss,
                          c_ce=rng.uniform(500, 2000, n),
                          f_max=rng.uniform(1000, 5000, n),
                          l_t_slack=lengths[0], l_ts_rest=lengths[1],
                          l_ce_opt=lengths[2], fl_width=rng.uniform(0.35, 0.6, n))
        l_mtu = l_ref * rng.uniform(0.99, 1.06, n)
        act = rng.uniform(0.0, 1.0, n)

        # (a) static force balance residual, checked per draw
        worst_residual = 0.0
        for i in range(n):
            p_i = WfmParams(**{f: float(getattr(draws, f)[i]) for f in
                               ("k_ss", "k_ts_passive", "k_ts_active", "c_ce", "f_max",
                                "l_t_slack", "l_ts_rest", "l_ce_opt", "fl_width")})
            out = solve_internal_balance(float(l_mtu[i]), float(lengths[2][i] * 0.9),
                                         float(act[i]), p_i)
            if out.taut:
                residual = abs(p_i.k_ss * (out.l_t - p_i.l_t_slack)
                               - titin_stiffness(act[i], p_i) * (out.l_ts - p_i.l_ts_rest))
                worst_residual = max(worst_residual, residual / p_i.f_max)
        balance_ok = worst_residual <= 1e-9

        # (b) long-time integrator limit vs bisection equilibrium
        roots = equilibrium_ce_length(l_mtu, act, draws)
        k_ts = draws.k_ts_passive + act * draws.k_ts_active
        k_eff = (draws.k_ss * k_ts / (draws.k_ss + k_ts)
                 + act * draws.f_max * 0.86 / (draws.fl_width * draws.l_ce_opt))
        dt = 0.5 * draws.c_ce / k_eff
        l_ce = np.full(n, 1e-9) * l_mtu
        for _ in range(400):
            l_ce = rk4_advance(l_ce, dt, (l_mtu, l_mtu, l_mtu), (act, act, act), draws)
        relax_gap = float(np.max(np.abs(l_ce - roots)))
        velocity_residual = float(np.max(
            np.abs(ce_velocity(l_mtu, roots, act, draws)) * draws.c_ce / draws.f_max))
        relax_ok = relax_gap <= 1e-6 and velocity_residual <= 1e-9

        # (c) moment arm vs finite difference of muscle length
        theta = np.deg2rad(np.arange(-30.0, 30.0 + 0.25, 0.5))[:, None]
        sides = np.array([1.0, -1.0])[rng.integers(0, 2, n)]
        geo_worst = 0.0
        h = 1e-6
        for i in range(n):
            g = AttachmentGeometry(
                r_origin=float(rng.uniform(0.05, 0.40)),
                r_insertion=float(rng.uniform(0.05, 0.40)),
                phi_neutral=float(np.deg2rad(rng.uniform(40.0, 140.0))),
                side="anterior" if sides[i] < 0 else "posterior")
            fd = (muscle_length(theta + h, g) - muscle_length(theta - h, g)) / (2 * h)
            geo_worst = max(geo_worst, float(np.max(np.abs(
                moment_arm(theta, g) - np.abs(fd)))))
        geometry_ok = geo_worst <= 1e-6

    ok = balance_ok and relax_ok and geometry_ok and t.elapsed < 10.0
    report("criterion 4 (mechanics oracles)", ok,
           f"balance_residual={worst_residual:.1e} relax_gap={relax_gap:.1e} "
           f"arm_vs_fd={geo_worst:.1e} runtime={t.elapsed:.1f}s")


def test_criterion_5_integrator_order(params, geoms, curves_at_optima):
    from test_muscle import _integrate, _smooth_schedule
    from test_pipeline import TAUT_CURVES

    with Timer() as t:
        ratios = []
        for seed in (11, 12, 13):
            p, l_mtu, act = _smooth_schedule(seed)
            l0 = equilibrium_ce_length(l_mtu(0.0), act(0.0), p)
            ref = _integrate(p, l_mtu, act, l0, 0.16, 640)
            err_dt = abs(_integrate(p, l_mtu, act, l0, 0.16, 10) - ref)
            err_half = abs(_integrate(p, l_mtu, act, l0, 0.16, 20) - ref)
            ratios.append(err_dt / err_half)
        richardson_ok = all(8.0 <= r <= 32.0 for r in ratios)

        split = synthetic_split(curves_at_optima, params, geoms,
                                sim=SimulationConfig(200, 1, 101), seed=42)
        trial = split.train[0]
        spec = tuple(subject_params(p, trial, g) for p, g in zip(params, geoms))
        base = simulate_gait(trial, TAUT_CURVES, spec, geoms,
                             SimulationConfig(2000, 2, 101))
        fine = simulate_gait(trial, TAUT_CURVES, spec, geoms,
                             SimulationConfig(4000, 2, 101))
        shift = float(np.max(np.abs(fine - base)) / np.max(np.abs(base)))
        shift_ok = shift < 1e-6

    ok = richardson_ok and shift_ok and t.elapsed < 10.0
    report("criterion 5 (integrator order)", ok,
           f"richardson_ratios={[round(r, 1) for r in ratios]} "
           f"default-step trace shift={shift:.1e} runtime={t.elapsed:.1f}s")


def test_criterion_6_pso_sphere():
    with Timer() as t:
        cfg = PsoConfig(bounds=((-5.0, 5.0),) * 3, swarm_size=30,
                        max_iterations=200, seed=42)
        first = optimize(lambda x: float(np.sum(x * x)), cfg)
        second = optimize(lambda x: float(np.sum(x * x)), cfg)
    deterministic = (np.array_equal(first.best_position, second.best_position)
                     and np.array_equal(first.history, second.history))
    monotone = bool(np.all(np.diff(first.history) <= 0))
    ok = (first.best_value <= 1e-6 and first.iterations_run <= 200
          and deterministic and monotone and t.elapsed < 5.0)
    report("criterion 6 (swarm sanity)", ok,
           f"best={first.best_value:.2e} iterations={first.iterations_run} "
           f"deterministic={deterministic} monotone={monotone} "
           f"runtime={t.elapsed:.1f}s")


def test_criterion_7_determinism(tmp_path):
    config = tmp_path / "config.yaml"
    config.write_text(f"""
output_dir: {tmp_path}/gen
simulation: {{steps_per_cycle: 200, warmup_cycles: 1, output_grid: 101}}
pso: {{swarm_size: 10, max_iterations: 30, seed: 42}}
""", encoding="utf-8")
    assert cli_main(["gen-synthetic", "-c", str(config)]) == 0
    train = sorted(str(p) for p in (tmp_path / "gen" / "trials").glob("train-*.csv"))

    outputs = []
    for name in ("rep1", "rep2"):
        outdir = tmp_path / name
        assert cli_main(["optimize", "-c", str(config), "-o", str(outdir),
                         "--train", *train]) == 0
        outputs.append({p.name: p.read_bytes() for p in outdir.iterdir()})
    same_names = sorted(outputs[0]) == sorted(outputs[1])
    same_bytes = same_names and all(outputs[0][k] == outputs[1][k] for k in outputs[0])
    report("criterion 7 (byte-identical reruns)", same_bytes,
           f"files={sorted(outputs[0])} identical={same_bytes}")
