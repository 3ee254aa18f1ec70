"""Global-best particle swarm optimization over a bounded box.

Standard velocity rule with inertia and constriction-equivalent constants:

    v <- w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x)
    x <- x + v

r1 and r2 are fresh uniform(0, 1) draws per component.  Positions are
clamped to the bounds componentwise and the velocity is zeroed in any
clamped component.  Runs are reproducible: one seeded generator drives the
whole swarm and particles are swept in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np


class NonFiniteObjectiveError(RuntimeError):
    """The objective returned NaN or inf at a probed position."""


@dataclass(frozen=True)
class PsoConfig:
    bounds: tuple[tuple[float, float], ...] = ((0.0, 1.0), (0.0, 1.0))
    swarm_size: int = 30
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    max_iterations: int = 300
    target_tolerance: float = 0.0
    seed: int = 42

    def __post_init__(self) -> None:
        object.__setattr__(self, "bounds",
                           tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.bounds:
            raise ValueError("bounds must be non-empty")
        for i, (lo, hi) in enumerate(self.bounds):
            if not lo < hi:
                raise ValueError(f"bounds[{i}]: lower bound must be < upper bound")

    @property
    def dim(self) -> int:
        return len(self.bounds)


@dataclass(frozen=True)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_value: float


@dataclass(frozen=True)
class OptimizationResult:
    best_position: np.ndarray
    best_value: float
    history: np.ndarray   # global best after init and after each iteration
    iterations_run: int


def update_particle(p: Particle, gbest: np.ndarray, cfg: PsoConfig, rng) -> Particle:
    """One velocity/position update; bests are untouched (owned by optimize)."""
    d = cfg.dim
    if len(p.position) != d or len(gbest) != d:
        raise ValueError(f"dimension mismatch: expected {d} components")
    r1 = rng.random(d)
    r2 = rng.random(d)
    velocity = (cfg.inertia * p.velocity
                + cfg.cognitive * r1 * (p.best_position - p.position)
                + cfg.social * r2 * (gbest - p.position))
    position = p.position + velocity
    lo = np.array([b[0] for b in cfg.bounds])
    hi = np.array([b[1] for b in cfg.bounds])
    clamped = (position < lo) | (position > hi)
    position = np.clip(position, lo, hi)
    velocity = np.where(clamped, 0.0, velocity)
    return Particle(position=position, velocity=velocity,
                    best_position=p.best_position, best_value=p.best_value)


def _evaluate(objective, batch_objective, positions: np.ndarray) -> np.ndarray:
    if batch_objective is not None:
        values = np.asarray(batch_objective(positions), dtype=float)
    else:
        values = np.array([float(objective(x)) for x in positions])
    if not np.all(np.isfinite(values)):
        bad = int(np.argmax(~np.isfinite(values)))
        raise NonFiniteObjectiveError(
            f"objective returned {values[bad]!r} at position {positions[bad].tolist()}")
    return values


def optimize(objective: Callable[[np.ndarray], float] | None, cfg: PsoConfig, *,
             batch_objective: Callable[[np.ndarray], Sequence[float]] | None = None,
             ) -> OptimizationResult:
    """Minimize over the bounded box; deterministic for a given seed.

    ``batch_objective``, when given, evaluates a (swarm_size, dim) matrix of
    positions in one call and is used instead of ``objective``; evaluations
    within an iteration are independent, so either route returns the same
    minimizer bookkeeping.
    """
    if objective is None and batch_objective is None:
        raise ValueError("an objective is required")
    rng = np.random.default_rng(cfg.seed)
    lo = np.array([b[0] for b in cfg.bounds])
    hi = np.array([b[1] for b in cfg.bounds])

    positions = rng.uniform(lo, hi, size=(cfg.swarm_size, cfg.dim))
    values = _evaluate(objective, batch_objective, positions)
    swarm = [Particle(position=x.copy(), velocity=np.zeros(cfg.dim),
                      best_position=x.copy(), best_value=float(v))
             for x, v in zip(positions, values)]
    g_idx = int(np.argmin(values))
    g_pos = positions[g_idx].copy()
    g_val = float(values[g_idx])

    history = [g_val]
    iterations = 0
    for iteration in range(cfg.max_iterations):
        if g_val <= cfg.target_tolerance:
            break
        swarm = [update_particle(p, g_pos, cfg, rng) for p in swarm]
        positions = np.stack([p.position for p in swarm])
        values = _evaluate(objective, batch_objective, positions)
        for i, (p, v) in enumerate(zip(swarm, values)):
            if v < p.best_value:
                swarm[i] = replace(p, best_position=p.position.copy(), best_value=float(v))
                if v < g_val:
                    g_val = float(v)
                    g_pos = p.position.copy()
        history.append(g_val)
        iterations = iteration + 1

    return OptimizationResult(best_position=g_pos, best_value=g_val,
                              history=np.asarray(history), iterations_run=iterations)


def fit_objective(amplitudes, trials, templates, params, geoms, sim=None, *,
                  per_subject_f_max: bool = True, calibrate_rest: bool = True) -> float:
    """Mean RMSE between simulated and reference torque across trials.

    ``amplitudes`` is (anterior, posterior); ``templates``, ``params`` and
    ``geoms`` are (anterior, posterior) pairs.  Each trial is simulated with
    its own body-mass-derived peak force (and rest lengths calibrated at its
    mean angle) unless disabled.
    """
    from . import pipeline  # deferred: keeps the optimizer importable alone

    batch = pipeline.batch_fit_objective(
        np.asarray([amplitudes], dtype=float), trials, templates, params, geoms,
        sim=sim, per_subject_f_max=per_subject_f_max, calibrate_rest=calibrate_rest)
    return float(batch[0])
